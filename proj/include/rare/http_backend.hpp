#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <atomic>
#include <httplib.h>
#include <string>

#include "rare/providers.hpp"

namespace rare::providers {

/// Count of real HTTP requests issued by this process; the offline test
/// suites assert it stays at zero.
inline std::atomic<uint64_t>& network_calls() {
    static std::atomic<uint64_t> n{0};
    return n;
}

namespace detail {

struct SplitUrl {
    std::string host; // scheme://host[:port]
    std::string prefix; // path prefix, may be empty
};

inline SplitUrl split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

inline json post_json(const std::string& base_url, const std::string& api_key,
                      const std::string& path, const json& body) {
    auto url = split_base_url(base_url);
    httplib::Client cli(url.host);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(300, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    network_calls().fetch_add(1);
    auto res = cli.Post(url.prefix + path, headers, body.dump(), "application/json");
    if (!res) throw Error("http error: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw Error("http status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw MalformedResponse("response is not JSON");
    return parsed;
}

} // namespace detail

/// OpenAI-compatible /chat/completions endpoint.
class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(std::string base_url, std::string api_key)
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
        if (base_url_.empty()) throw ConfigInvalid("chat provider base URL not configured");
    }

    std::string complete(const ChatRequest& req) override {
        json body{{"model", req.model},
                  {"messages", json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                                            json{{"role", "user"}, {"content", req.user_prompt}}})},
                  {"temperature", req.temperature},
                  {"max_tokens", req.max_tokens}};
        json resp = detail::post_json(base_url_, api_key_, "/chat/completions", body);
        if (!resp.contains("choices") || resp["choices"].empty()) {
            throw MalformedResponse("no choices in completion response");
        }
        const auto& msg = resp["choices"][0];
        std::string text;
        if (msg.contains("message") && msg["message"].contains("content") &&
            msg["message"]["content"].is_string()) {
            text = msg["message"]["content"].get<std::string>();
        }
        if (text.empty()) throw MalformedResponse("completion returned no text");
        return text;
    }

private:
    std::string base_url_;
    std::string api_key_;
};

/// OpenAI-compatible /embeddings endpoint.
class HttpEmbedBackend : public EmbedBackend {
public:
    HttpEmbedBackend(std::string base_url, std::string api_key)
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
        if (base_url_.empty()) throw ConfigInvalid("embedding provider base URL not configured");
    }

    std::vector<double> embed_one(const std::string& model, const std::string& input) override {
        json body{{"model", model}, {"input", json::array({input})}};
        json resp = detail::post_json(base_url_, api_key_, "/embeddings", body);
        if (!resp.contains("data") || resp["data"].empty() || !resp["data"][0].contains("embedding")) {
            throw MalformedResponse("no embedding in response");
        }
        return resp["data"][0]["embedding"].get<std::vector<double>>();
    }

private:
    std::string base_url_;
    std::string api_key_;
};

} // namespace rare::providers
