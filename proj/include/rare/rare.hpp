#pragma once

// Umbrella header for the RARE benchmark-synthesis and robustness-evaluation
// toolkit.

#include "rare/config.hpp"
#include "rare/core.hpp"
#include "rare/errors.hpp"
#include "rare/evalcore.hpp"
#include "rare/hash.hpp"
#include "rare/http_backend.hpp"
#include "rare/ingest.hpp"
#include "rare/jsonl.hpp"
#include "rare/kgraph.hpp"
#include "rare/log.hpp"
#include "rare/manifest.hpp"
#include "rare/mock.hpp"
#include "rare/parallel.hpp"
#include "rare/patterns.hpp"
#include "rare/perturb.hpp"
#include "rare/pipeline.hpp"
#include "rare/prompts.hpp"
#include "rare/providers.hpp"
#include "rare/qagen.hpp"
#include "rare/retrieval.hpp"
#include "rare/rng.hpp"
#include "rare/text.hpp"
#include "rare/tokenize.hpp"
#include "rare/version.hpp"
