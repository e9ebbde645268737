#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rare/errors.hpp"
#include "rare/hash.hpp"
#include "rare/jsonl.hpp"
#include "rare/log.hpp"

namespace rare::providers {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Request/response types
// ---------------------------------------------------------------------------

struct ChatRequest {
    std::string model;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    size_t max_tokens = 1024;
};

struct ChatResponse {
    std::string text;
    std::string model;
    bool cached = false;
};

struct EmbeddingVector {
    std::string model;
    std::vector<double> values;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

// ---------------------------------------------------------------------------
// Content-addressed cache keys
// ---------------------------------------------------------------------------

struct CacheKey {
    std::string digest; // 64 hex chars

    static CacheKey for_chat(const ChatRequest& r) {
        json payload = json::array({"chat", r.model, r.system_prompt, r.user_prompt,
                                    r.temperature, r.max_tokens});
        return CacheKey{hash::sha256_hex(payload.dump())};
    }

    static CacheKey for_embedding(const std::string& model, const std::string& input) {
        json payload = json::array({"embed", model, input});
        return CacheKey{hash::sha256_hex(payload.dump())};
    }
};

/// One file per key under the cache dir; writes go through a temp file and
/// rename, so concurrent writers of the same key are safe.
class DiskCache {
public:
    DiskCache() = default;
    explicit DiskCache(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }

    std::optional<json> get(const CacheKey& key) const {
        if (!enabled()) return std::nullopt;
        fs::path p = dir_ / (key.digest + ".json");
        if (!fs::exists(p)) return std::nullopt;
        return jsonl::read_json(p);
    }

    void put(const CacheKey& key, const json& value) const {
        if (!enabled()) return;
        jsonl::write_text_atomic(dir_ / (key.digest + ".json"), value.dump());
    }

private:
    fs::path dir_;
};

// ---------------------------------------------------------------------------
// Concurrency guard: bounded in-flight requests
// ---------------------------------------------------------------------------

class Semaphore {
public:
    explicit Semaphore(size_t n) : count_(n) {}
    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    size_t count_;
};

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore* s) : sem(s) {
        if (sem) sem->acquire();
    }
    ~SemaphoreGuard() {
        if (sem) sem->release();
    }
    Semaphore* sem;
};

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<double> embed_one(const std::string& model, const std::string& input) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    double base_delay_s = 1.0;
    std::function<void(double)> sleeper = [](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };

    double delay_for(int attempt) const { // attempt is 1-based
        double d = base_delay_s * std::pow(2.0, attempt - 1);
        // jitter in [0.5, 1.5)
        static std::atomic<uint64_t> tick{0};
        uint64_t t = hash::fnv1a64(std::to_string(tick.fetch_add(1)));
        double j = 0.5 + static_cast<double>(t % 1000) / 1000.0;
        return d * j;
    }
};

// ---------------------------------------------------------------------------
// Clients: cache + retry wrappers around a backend
// ---------------------------------------------------------------------------

class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatBackend> backend, std::shared_ptr<DiskCache> cache,
               RetryPolicy retry = {}, std::shared_ptr<Semaphore> limiter = nullptr)
        : backend_(std::move(backend)), cache_(std::move(cache)), retry_(retry),
          limiter_(std::move(limiter)) {}

    ChatResponse chat(const ChatRequest& req) {
        CacheKey key = CacheKey::for_chat(req);
        if (cache_) {
            if (auto hit = cache_->get(key)) {
                return ChatResponse{hit->at("text").get<std::string>(), req.model, true};
            }
        }
        std::string last_error;
        for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
            try {
                std::string out;
                {
                    SemaphoreGuard guard(limiter_.get());
                    out = backend_->complete(req);
                }
                if (cache_) cache_->put(key, json{{"kind", "chat"}, {"model", req.model}, {"text", out}});
                return ChatResponse{out, req.model, false};
            } catch (const MalformedResponse&) {
                throw; // a parseable-but-empty reply will not improve on retry
            } catch (const std::exception& e) {
                last_error = e.what();
                log::warn("chat attempt ", attempt, "/", retry_.max_attempts, " failed: ", last_error);
                if (attempt < retry_.max_attempts) retry_.sleeper(retry_.delay_for(attempt));
            }
        }
        throw ProviderUnavailable("chat failed after " + std::to_string(retry_.max_attempts) +
                                  " attempts: " + last_error);
    }

private:
    std::shared_ptr<ChatBackend> backend_;
    std::shared_ptr<DiskCache> cache_;
    RetryPolicy retry_;
    std::shared_ptr<Semaphore> limiter_;
};

class EmbedClient {
public:
    EmbedClient(std::shared_ptr<EmbedBackend> backend, std::shared_ptr<DiskCache> cache,
                RetryPolicy retry = {}, std::shared_ptr<Semaphore> limiter = nullptr)
        : backend_(std::move(backend)), cache_(std::move(cache)), retry_(retry),
          limiter_(std::move(limiter)) {}

    std::vector<EmbeddingVector> embed(const std::string& model, const std::vector<std::string>& texts) {
        if (texts.empty()) throw Error("embed: empty input");
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_single(model, t));
        return out;
    }

    EmbeddingVector embed_single(const std::string& model, const std::string& input) {
        CacheKey key = CacheKey::for_embedding(model, input);
        if (cache_) {
            if (auto hit = cache_->get(key)) {
                auto vec = hit->at("vector").get<std::vector<double>>();
                check_dimension(model, vec.size());
                return EmbeddingVector{model, std::move(vec)};
            }
        }
        std::string last_error;
        for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
            try {
                std::vector<double> vec;
                {
                    SemaphoreGuard guard(limiter_.get());
                    vec = backend_->embed_one(model, input);
                }
                check_dimension(model, vec.size());
                if (cache_) cache_->put(key, json{{"kind", "embed"}, {"model", model}, {"vector", vec}});
                return EmbeddingVector{model, std::move(vec)};
            } catch (const DimensionMismatch&) {
                throw;
            } catch (const std::exception& e) {
                last_error = e.what();
                log::warn("embed attempt ", attempt, "/", retry_.max_attempts, " failed: ", last_error);
                if (attempt < retry_.max_attempts) retry_.sleeper(retry_.delay_for(attempt));
            }
        }
        throw ProviderUnavailable("embed failed after " + std::to_string(retry_.max_attempts) +
                                  " attempts: " + last_error);
    }

    double similarity(const std::string& model, const std::string& a, const std::string& b) {
        auto va = embed_single(model, a);
        auto vb = embed_single(model, b);
        return cosine(va.values, vb.values);
    }

private:
    void check_dimension(const std::string& model, size_t dim) {
        if (dim == 0) throw MalformedResponse("empty embedding for model " + model);
        std::lock_guard<std::mutex> lock(mu_);
        auto [it, inserted] = dims_.try_emplace(model, dim);
        if (!inserted && it->second != dim) {
            throw DimensionMismatch("model " + model + " returned dim " + std::to_string(dim) +
                                    ", expected " + std::to_string(it->second));
        }
    }

    std::shared_ptr<EmbedBackend> backend_;
    std::shared_ptr<DiskCache> cache_;
    RetryPolicy retry_;
    std::shared_ptr<Semaphore> limiter_;
    std::mutex mu_;
    std::map<std::string, size_t> dims_;
};

// ---------------------------------------------------------------------------
// JSON extraction from LLM output
// ---------------------------------------------------------------------------

/// Return the first syntactically valid JSON object or array in `raw`,
/// tolerating surrounding prose and code fences.
inline json extract_json(const std::string& raw) {
    for (size_t start = 0; start < raw.size(); ++start) {
        char open = raw[start];
        if (open != '{' && open != '[') continue;
        char close = open == '{' ? '}' : ']';
        int depth = 0;
        bool in_string = false, escaped = false;
        for (size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == open) {
                ++depth;
            } else if (c == close) {
                if (--depth == 0) {
                    auto candidate = raw.substr(start, i - start + 1);
                    json parsed = json::parse(candidate, nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break; // malformed; try the next opener
                }
            }
        }
    }
    throw NoJsonFound();
}

// ---------------------------------------------------------------------------
// Role-based endpoint configuration
// ---------------------------------------------------------------------------

struct Endpoint {
    std::string base_url; // e.g. http://localhost:8000/v1
    std::string api_key;
    std::string model;
};

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

/// Env var lookup per provider role: RARE_<ROLE>_BASE_URL / _API_KEY with
/// RARE_BASE_URL / RARE_API_KEY and the OPENAI_* pair as fallbacks.
inline Endpoint endpoint_from_env(const std::string& role, const std::string& model) {
    std::string upper;
    for (char c : role) upper.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    Endpoint ep;
    ep.model = model;
    ep.base_url = env_or(("RARE_" + upper + "_BASE_URL").c_str(),
                         env_or("RARE_BASE_URL", env_or("OPENAI_BASE_URL", "")));
    ep.api_key = env_or(("RARE_" + upper + "_API_KEY").c_str(),
                        env_or("RARE_API_KEY", env_or("OPENAI_API_KEY", "")));
    return ep;
}

} // namespace rare::providers
