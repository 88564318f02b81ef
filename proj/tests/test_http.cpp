#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "tqa/http.hpp"

using namespace tqa;

namespace {

// Loopback server capturing what the client actually sent.
struct CaptureServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::string auth_header;
    std::string body;

    CaptureServer() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
            auth_header = req.get_header_value("Authorization");
            body = req.body;
            res.set_content(R"({"choices":[{"message":{"content":"pong"}}]})",
                            "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~CaptureServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("http transport round-trips and takes credentials from the environment only") {
    CaptureServer srv;
    std::string base = "http://127.0.0.1:" + std::to_string(srv.port);

    SECTION("no key in the environment: no Authorization header") {
        unsetenv("TQA_API_KEY");
        HttpPostFn post = make_http_post(base);
        auto [status, reply] = post("/v1/chat/completions", R"({"x":1})");
        CHECK(status == 200);
        CHECK(reply.find("pong") != std::string::npos);
        CHECK(srv.auth_header.empty());
        CHECK(srv.body == R"({"x":1})");
    }

    SECTION("key present: sent as a bearer token") {
        setenv("TQA_API_KEY", "sk-test-123", 1);
        HttpPostFn post = make_http_post(base);
        auto [status, reply] = post("/v1/chat/completions", "{}");
        CHECK(status == 200);
        CHECK(srv.auth_header == "Bearer sk-test-123");
        unsetenv("TQA_API_KEY");
    }
}

TEST_CASE("http transport reports unreachable hosts as TransportError") {
    // port 1 on loopback: nothing listens there
    HttpPostFn post = make_http_post("http://127.0.0.1:1");
    CHECK_THROWS_AS(post("/v1/chat/completions", "{}"), TransportError);
}
