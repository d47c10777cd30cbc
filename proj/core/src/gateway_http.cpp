// HTTP chat-completions provider. Kept in its own translation unit so the
// header-only HTTP client is compiled exactly once.

#include <httplib.h>
#include <json.hpp>

#include "forge/gateway.hpp"

namespace forge {

using nlohmann::json;

namespace {

class HttpProvider : public Provider {
public:
    HttpProvider(std::string endpoint, std::string api_key, std::string model)
        : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {}

    std::string name() const override { return "http:" + endpoint_; }

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        json payload;
        payload["model"] = model_;
        payload["temperature"] = request.decoding.temperature;
        payload["max_tokens"] = request.decoding.max_tokens;
        if (!request.decoding.effort.empty()) payload["reasoning_effort"] = request.decoding.effort;
        payload["messages"] = json::array();
        for (const auto& m : request.messages)
            payload["messages"].push_back({{"role", m.role}, {"content", m.content}});

        httplib::Client client(endpoint_);
        client.set_connection_timeout(15);
        client.set_read_timeout(600);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post("/v1/chat/completions", headers, payload.dump(), "application/json");
        if (!res)
            throw ProviderError("http provider: no response from " + endpoint_ + " (" +
                                httplib::to_string(res.error()) + ")");
        if (res->status != 200)
            throw ProviderError("http provider: status " + std::to_string(res->status) + " from " +
                                endpoint_ + ": " + res->body.substr(0, 500));
        try {
            json body = json::parse(res->body);
            ChatResponse out;
            out.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
            if (body.contains("usage")) {
                out.usage.input_tokens = body["usage"].value("prompt_tokens", 0LL);
                out.usage.output_tokens = body["usage"].value("completion_tokens", 0LL);
            }
            return out;
        } catch (const json::exception& e) {
            throw ProviderError(std::string("http provider: malformed response body: ") + e.what());
        }
    }

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_;
};

}  // namespace

std::shared_ptr<Provider> make_http_provider(const std::string& endpoint, const std::string& api_key,
                                             const std::string& model) {
    return std::make_shared<HttpProvider>(endpoint, api_key, model);
}

}  // namespace forge
