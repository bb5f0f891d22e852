#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cvs/evaluator.hpp"

namespace cvs {

/// Pieces of a parsed http(s) endpoint URI.
struct EndpointParts {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path;

    /// Origin form ("http://host:port") accepted by the HTTP client.
    std::string base() const;
};

/// Validates and splits an endpoint URI. Throws ConfigError on anything that
/// is not a well-formed http:// or https:// URI. An empty path defaults to
/// /v1/chat/completions.
EndpointParts parse_endpoint(const std::string& uri);

/// Name of the environment variable read for bearer-token authentication.
inline constexpr const char* kApiKeyEnvVar = "CVS_API_KEY";

/// Remote evaluator speaking the chat-completion wire protocol: one user
/// message with the prompt text (plus one inline data-URI image when the
/// prompt attaches one), max_tokens=1, temperature=0, top-k logprobs
/// enabled. Transient failures are retried with exponential backoff up to
/// max_retries; transport and protocol errors carry the sample id and
/// context kind.
class HttpEvaluator : public Evaluator {
public:
    /// `max_in_flight` caps concurrent outstanding requests; 0 means
    /// unbounded.
    explicit HttpEvaluator(EvaluatorConfig config, int max_in_flight = 0);
    ~HttpEvaluator() override;

    VerdictProbs judge(const SampleRecord& sample, const RenderedPrompt& prompt) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Builds the JSON request body sent for one prompt. Exposed for tests.
std::string build_chat_request_body(const EvaluatorConfig& config, const RenderedPrompt& prompt,
                                    const std::optional<std::string>& image_data_uri);

/// Extracts the first generated token's top-k (token, logprob) list from a
/// chat-completion response body. Throws ProtocolError when the shape is not
/// as expected.
std::vector<TokenLogprob> parse_chat_completion_response(const std::string& body);

/// Reads an image file and wraps it as a base64 data URI, with the media
/// type guessed from the extension.
std::string image_file_to_data_uri(const std::filesystem::path& path);

std::string base64_encode(std::span<const unsigned char> bytes);

}  // namespace cvs
