#include "gisurv/annotator.hpp"

#include "gisurv/error.hpp"
#include "gisurv/table_io.hpp"
#include "gisurv/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace gisurv {

using nlohmann::json;

namespace {

json request_json(const std::string &model, const std::vector<ChatMessage> &messages) {
    json msgs = json::array();
    for (const auto &m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model}, {"messages", std::move(msgs)}, {"temperature", BackendConfig::temperature}};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string generation_from_response(const json &response) {
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception &e) {
        throw BackendError(std::string("unexpected chat completion response: ") + e.what());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must be an http:// or https:// URL");
    const auto slash = config_.endpoint.find('/', scheme + 3);
    host_ = config_.endpoint.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : config_.endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const std::string suffix = "/chat/completions";
    if (prefix.size() >= suffix.size() && prefix.compare(prefix.size() - suffix.size(), suffix.size(), suffix) == 0)
        path_ = prefix;
    else
        path_ = prefix + "/v1/chat/completions";
    if (!config_.api_key_env.empty())
        if (const char *tok = std::getenv(config_.api_key_env.c_str())) token_ = tok;
}

std::string RemoteBackend::generate(const GenerationRequest &request) {
    const std::string body = request_json(request.model, request.messages).dump();
    httplib::Client client(host_);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double delay = config_.backoff_initial_seconds * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            json response;
            try {
                response = json::parse(res->body);
            } catch (const json::parse_error &e) {
                throw BackendError(std::string("malformed response body: ") + e.what());
            }
            return generation_from_response(response);
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) break;  // not retryable
    }
    throw BackendError("request for review \"" + request.review->id + "\" failed: " + last_error);
}

// ---------------------------------------------------------------------------
// ResponseCache

std::string cache_key(Task task, std::string_view prompt_name, int shots, std::string_view model,
                      std::string_view review_id, std::string_view review_text) {
    const std::string shots_text = std::to_string(shots);
    std::string material;
    for (std::string_view part : {to_string(task), prompt_name, std::string_view(shots_text), model, review_id, review_text}) {
        material.append(part);
        material.push_back('\x1f');
    }
    return sha256_hex(material);
}

struct ResponseCache::Impl {
    std::filesystem::path path;
    mutable std::mutex mutex;
    std::unordered_map<std::string, std::string> generations;
    std::set<std::string> models;
};

ResponseCache::ResponseCache(std::filesystem::path path) : impl_(std::make_shared<Impl>()) {
    impl_->path = std::move(path);
    std::ifstream in(impl_->path, std::ios::binary);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto entry = json::parse(line);
            impl_->generations[entry.at("key").get<std::string>()] = generation_from_response(entry.at("response"));
            impl_->models.insert(entry.at("request").value("model", ""));
        } catch (const json::exception &e) {
            throw DataError(impl_->path.string() + ": malformed cache entry: " + e.what(), line_no);
        } catch (const BackendError &e) {
            throw DataError(impl_->path.string() + ": " + e.what(), line_no);
        }
    }
}

std::optional<std::string> ResponseCache::lookup(const std::string &key) const {
    const std::lock_guard lock(impl_->mutex);
    const auto it = impl_->generations.find(key);
    if (it == impl_->generations.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::append(const std::string &key, const GenerationRequest &request, const std::string &generation) {
    json req = request_json(request.model, request.messages);
    req["task"] = std::string(to_string(request.task));
    req["prompt"] = request.prompt_name;
    req["shots"] = request.shots;
    req["review_id"] = request.review->id;
    json entry{{"key", key},
               {"request", std::move(req)},
               {"response", {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", generation}}}}})}}},
               {"timestamp", utc_timestamp()}};
    const std::string line = entry.dump() + "\n";

    const std::lock_guard lock(impl_->mutex);
    std::ofstream out(impl_->path, std::ios::binary | std::ios::app);
    if (!out) throw ConfigError("cannot append to cache: " + impl_->path.string());
    out << line;
    impl_->generations[key] = generation;
    impl_->models.insert(request.model);
}

std::size_t ResponseCache::size() const {
    const std::lock_guard lock(impl_->mutex);
    return impl_->generations.size();
}

std::set<std::string> ResponseCache::models() const {
    const std::lock_guard lock(impl_->mutex);
    return impl_->models;
}

}  // namespace gisurv
