#pragma once

#include <stdexcept>
#include <string>

namespace rare {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyDocument : Error {
    explicit EmptyDocument(const std::string& doc_id)
        : Error("document has no non-whitespace content: " + doc_id) {}
};

struct ProviderUnavailable : Error {
    using Error::Error;
};

struct MalformedResponse : Error {
    using Error::Error;
};

struct NoJsonFound : Error {
    NoJsonFound() : Error("no JSON value found in response") {}
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    EmptyCorpus() : Error("corpus has no chunks") {}
};

struct IncompleteGrid : Error {
    using Error::Error;
};

struct MissingArtifact : Error {
    explicit MissingArtifact(const std::string& stage, const std::string& path)
        : Error("missing artifact for stage '" + stage + "': " + path), stage(stage) {}
    std::string stage;
};

struct ConfigInvalid : Error {
    using Error::Error;
};

} // namespace rare
