#include "gisurv/annotator.hpp"
#include "gisurv/error.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

using namespace gisurv;
using nlohmann::json;

namespace {

// Local OpenAI-style server. The first `fail_first` requests get `fail_status`.
struct FakeServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    int fail_first = 0;
    int fail_status = 500;
    std::mutex mutex;
    std::string last_auth;
    json last_body;

    explicit FakeServer(std::string path = "/v1/chat/completions") {
        server.Post(path, [this](const httplib::Request &req, httplib::Response &res) {
            const int n = ++requests;
            {
                std::lock_guard lock(mutex);
                last_auth = req.get_header_value("Authorization");
                last_body = json::parse(req.body);
            }
            if (n <= fail_first) {
                res.status = fail_status;
                return;
            }
            const std::string user = last_body["messages"].back()["content"];
            const json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + user}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread.join();
    }
};

BackendConfig remote_config(int port, std::string suffix = "") {
    BackendConfig c;
    c.kind = BackendKind::remote;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + suffix;
    c.model = "test-model";
    c.backoff_initial_seconds = 0.01;
    c.max_retries = 3;
    c.timeout_seconds = 5;
    c.api_key_env = "GISURV_TEST_TOKEN";
    return c;
}

const Review review{"r1", "I was sick", {}};

GenerationRequest request() {
    return {Task::gi_classification, "p", 0, "test-model", &review, {{"user", "hello"}}};
}

}  // namespace

TEST_CASE("remote backend sends an OpenAI chat request with a bearer token") {
    ::setenv("GISURV_TEST_TOKEN", "s3cret", 1);
    FakeServer server;
    RemoteBackend backend(remote_config(server.port));
    CHECK(backend.generate(request()) == "echo:hello");
    CHECK(server.last_auth == "Bearer s3cret");
    CHECK(server.last_body["model"] == "test-model");
    CHECK(server.last_body["temperature"] == 0.0);
    CHECK(server.last_body["messages"][0]["role"] == "user");
    ::unsetenv("GISURV_TEST_TOKEN");
}

TEST_CASE("endpoint paths") {
    FakeServer server("/api/v1/chat/completions");
    RemoteBackend full(remote_config(server.port, "/api/v1/chat/completions"));
    CHECK(full.generate(request()) == "echo:hello");
    RemoteBackend prefix(remote_config(server.port, "/api/"));
    CHECK(prefix.generate(request()) == "echo:hello");
}

TEST_CASE("retries 5xx and 429 with backoff, then succeeds") {
    for (const int status : {500, 503, 429}) {
        FakeServer server;
        server.fail_first = 2;
        server.fail_status = status;
        RemoteBackend backend(remote_config(server.port));
        CHECK(backend.generate(request()) == "echo:hello");
        CHECK(server.requests == 3);
    }
}

TEST_CASE("gives up after max_retries") {
    FakeServer server;
    server.fail_first = 100;
    RemoteBackend backend(remote_config(server.port));
    CHECK_THROWS_AS(backend.generate(request()), BackendError);
    CHECK(server.requests == 4);
}

TEST_CASE("client errors are not retried") {
    FakeServer server;
    server.fail_first = 100;
    server.fail_status = 400;
    RemoteBackend backend(remote_config(server.port));
    CHECK_THROWS_AS(backend.generate(request()), BackendError);
    CHECK(server.requests == 1);
}

TEST_CASE("transport errors are retried and reported") {
    int port = 0;
    {
        FakeServer server;
        port = server.port;
    }
    auto cfg = remote_config(port);
    cfg.max_retries = 1;
    RemoteBackend backend(cfg);
    CHECK_THROWS_AS(backend.generate(request()), BackendError);
}

TEST_CASE("annotate through the remote backend records a replayable cache") {
    FakeServer server;
    const auto dir = std::filesystem::temp_directory_path() / "gisurv-test-remote-cache";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto cfg = remote_config(server.port);
    cfg.cache_path = dir / "cache.jsonl";
    const PromptSpec prompt("p", Task::gi_classification, "{review}", 0, {});
    std::vector<Review> reviews;
    for (int i = 0; i < 12; ++i) reviews.push_back({"r" + std::to_string(i), "text " + std::to_string(i), {}});
    const auto live = annotate(reviews, prompt, cfg);
    CHECK(live.failures == 0);
    CHECK(server.requests == 12);
    CHECK(live.results[5].raw_generation == "echo:text 5");

    auto replay = cfg;
    replay.kind = BackendKind::replay;
    const auto again = annotate(reviews, prompt, replay);
    CHECK(again.results == live.results);
    CHECK(server.requests == 12);

    std::ifstream in(cfg.cache_path);
    std::string line;
    std::getline(in, line);
    const auto first = json::parse(line);
    CHECK(first.contains("key"));
    CHECK(first["request"]["model"] == "test-model");
    CHECK(first["response"]["choices"][0]["message"].contains("content"));
    CHECK(first.contains("timestamp"));
    std::filesystem::remove_all(dir);
}
