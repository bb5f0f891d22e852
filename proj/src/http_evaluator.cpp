#include "cvs/http_evaluator.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cvs/errors.hpp"

namespace cvs {

namespace {

using nlohmann::json;

constexpr const char* kDefaultCompletionsPath = "/v1/chat/completions";

std::string guess_media_type(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".webp") return "image/webp";
    if (ext == ".gif") return "image/gif";
    if (ext == ".bmp") return "image/bmp";
    return "application/octet-stream";
}

bool is_transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

// Simple bounded-count gate; a plain mutex/cv pair keeps us off
// platform-dependent semaphore maxima.
class InFlightGate {
public:
    explicit InFlightGate(int cap) : cap_(cap) {}

    void acquire() {
        if (cap_ <= 0) return;
        std::unique_lock lock(m_);
        cv_.wait(lock, [this] { return in_flight_ < cap_; });
        ++in_flight_;
    }

    void release() {
        if (cap_ <= 0) return;
        {
            std::lock_guard lock(m_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    int cap_;
    int in_flight_ = 0;
    std::mutex m_;
    std::condition_variable cv_;
};

}  // namespace

std::string EndpointParts::base() const {
    return scheme + "://" + host + ":" + std::to_string(port);
}

EndpointParts parse_endpoint(const std::string& uri) {
    EndpointParts parts;
    std::string rest;
    if (uri.rfind("http://", 0) == 0) {
        parts.scheme = "http";
        parts.port = 80;
        rest = uri.substr(7);
    } else if (uri.rfind("https://", 0) == 0) {
        parts.scheme = "https";
        parts.port = 443;
        rest = uri.substr(8);
    } else {
        throw ConfigError("endpoint must be an http:// or https:// URI: \"" + uri + "\"");
    }

    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    parts.path = slash == std::string::npos ? "" : rest.substr(slash);

    auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        parts.host = authority.substr(0, colon);
        const std::string port_text = authority.substr(colon + 1);
        if (port_text.empty() || port_text.size() > 5 ||
            port_text.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("invalid port in endpoint: \"" + uri + "\"");
        }
        parts.port = std::stoi(port_text);
        if (parts.port <= 0 || parts.port > 65535) {
            throw ConfigError("port out of range in endpoint: \"" + uri + "\"");
        }
    } else {
        parts.host = authority;
    }

    if (parts.host.empty()) {
        throw ConfigError("endpoint has no host: \"" + uri + "\"");
    }
    if (parts.path.empty()) {
        parts.path = kDefaultCompletionsPath;
    }
    return parts;
}

std::string base64_encode(std::span<const unsigned char> bytes) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        unsigned triple = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += alphabet[(triple >> 18) & 0x3f];
        out += alphabet[(triple >> 12) & 0x3f];
        out += alphabet[(triple >> 6) & 0x3f];
        out += alphabet[triple & 0x3f];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned rem = bytes[i] << 16;
        out += alphabet[(rem >> 18) & 0x3f];
        out += alphabet[(rem >> 12) & 0x3f];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned rem = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += alphabet[(rem >> 18) & 0x3f];
        out += alphabet[(rem >> 12) & 0x3f];
        out += alphabet[(rem >> 6) & 0x3f];
        out += '=';
    }
    return out;
}

std::string image_file_to_data_uri(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open image: " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return "data:" + guess_media_type(path) + ";base64," +
           base64_encode(std::span<const unsigned char>(bytes.data(), bytes.size()));
}

std::string build_chat_request_body(const EvaluatorConfig& config, const RenderedPrompt& prompt,
                                    const std::optional<std::string>& image_data_uri) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt.text}});
    if (image_data_uri) {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", *image_data_uri}}}});
    }
    json body = {
        {"model", config.model_name},
        {"messages", json::array({json{{"role", "user"}, {"content", content}}})},
        {"max_tokens", 1},
        {"logprobs", true},
        {"top_logprobs", config.top_logprobs_requested},
        {"temperature", 0},
    };
    return body.dump();
}

std::vector<TokenLogprob> parse_chat_completion_response(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ProtocolError("response is not valid JSON");
    }
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw ProtocolError("response has no choices");
    }
    const json& choice = (*choices)[0];
    auto logprobs = choice.find("logprobs");
    if (logprobs == choice.end() || !logprobs->is_object()) {
        throw ProtocolError("response choice carries no logprobs object");
    }
    auto content = logprobs->find("content");
    if (content == logprobs->end() || !content->is_array() || content->empty()) {
        throw ProtocolError("response logprobs carry no content tokens");
    }
    auto top = (*content)[0].find("top_logprobs");
    if (top == (*content)[0].end() || !top->is_array() || top->empty()) {
        throw ProtocolError("response carries no top_logprobs for the first token");
    }
    std::vector<TokenLogprob> tokens;
    tokens.reserve(top->size());
    for (const json& entry : *top) {
        if (!entry.is_object() || !entry.contains("token") || !entry["token"].is_string() ||
            !entry.contains("logprob") || !entry["logprob"].is_number()) {
            throw ProtocolError("malformed top_logprobs entry");
        }
        tokens.push_back({entry["token"].get<std::string>(), entry["logprob"].get<double>()});
    }
    return tokens;
}

struct HttpEvaluator::Impl {
    EvaluatorConfig config;
    EndpointParts endpoint;
    std::string bearer_token;
    InFlightGate gate;

    Impl(EvaluatorConfig cfg, int max_in_flight)
        : config(std::move(cfg)), endpoint(parse_endpoint(config.endpoint)), gate(max_in_flight) {
        config.validate();
        if (const char* key = std::getenv(kApiKeyEnvVar)) {
            bearer_token = key;
        }
    }

    httplib::Result post_once(const std::string& body) {
        httplib::Client client(endpoint.base());
        const auto timeout = config.request_timeout;
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto usecs =
            std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }
        return client.Post(endpoint.path, headers, body, "application/json");
    }
};

HttpEvaluator::HttpEvaluator(EvaluatorConfig config, int max_in_flight)
    : impl_(std::make_unique<Impl>(std::move(config), max_in_flight)) {}

HttpEvaluator::~HttpEvaluator() = default;

VerdictProbs HttpEvaluator::judge(const SampleRecord& sample, const RenderedPrompt& prompt) {
    const std::string tag = "sample \"" + sample.id + "\" [" + to_string(prompt.context_kind) + "]";

    std::optional<std::string> image_uri;
    if (prompt.attach_image) {
        if (sample.image_path.rfind("data:", 0) == 0 ||
            sample.image_path.rfind("http://", 0) == 0 ||
            sample.image_path.rfind("https://", 0) == 0) {
            image_uri = sample.image_path;
        } else {
            try {
                image_uri = image_file_to_data_uri(sample.image_path);
            } catch (const DataError& e) {
                throw DataError(tag + ": " + e.what());
            }
        }
    }

    const std::string body = build_chat_request_body(impl_->config, prompt, image_uri);
    const int attempts_allowed = impl_->config.max_retries + 1;

    impl_->gate.acquire();
    struct GateRelease {
        InFlightGate& gate;
        ~GateRelease() { gate.release(); }
    } release{impl_->gate};

    std::string last_error;
    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        if (attempt > 0) {
            auto backoff = std::chrono::milliseconds(100) * (1 << std::min(attempt - 1, 4));
            std::this_thread::sleep_for(std::min(backoff, std::chrono::milliseconds(2000)));
        }
        auto result = impl_->post_once(body);
        if (!result) {
            last_error = "connection failed: " + httplib::to_string(result.error());
            continue;
        }
        if (is_transient_status(result->status)) {
            last_error = "server returned status " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            throw TransportError(tag + ": server returned status " +
                                 std::to_string(result->status));
        }

        std::vector<TokenLogprob> tokens;
        try {
            tokens = parse_chat_completion_response(result->body);
        } catch (const ProtocolError& e) {
            throw ProtocolError(tag + ": " + e.what());
        }
        auto [p_yes, p_no] = extract_yes_no_probs(tokens, impl_->config.probability_floor);

        VerdictProbs verdict;
        verdict.p_yes = p_yes;
        verdict.p_no = p_no;
        verdict.context_kind = prompt.context_kind;
        verdict.raw_token_evidence = std::move(tokens);
        return verdict;
    }

    throw TransportError(tag + ": " + last_error + " after " + std::to_string(attempts_allowed) +
                         " attempt(s)");
}

}  // namespace cvs
