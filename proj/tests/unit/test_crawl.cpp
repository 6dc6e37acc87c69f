#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "siterep/crawl.hpp"

using namespace siterep;

namespace {

// Handlers must not assert (Catch2 assertions are not thread-safe off the
// main thread); they record, the test checks.
struct TestServer {
    httplib::Server svr;
    int port = 0;
    std::thread thread;

    void start() {
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    ~TestServer() {
        svr.stop();
        if (thread.joinable()) thread.join();
    }

    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

constexpr const char* kPage =
    "<html><body><a href='/x'>l</a><script>var a=1;</script>hi</body></html>";

}  // namespace

TEST_CASE("fetch_pages preserves order and isolates failures") {
    TestServer ts;
    ts.svr.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPage, "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    cfg.timeout_s = 2.0;
    std::vector<std::string> urls = {
        ts.url("/ok"),
        "not a url at all",
        "http://127.0.0.1:1/refused",
        ts.url("/ok"),
    };
    auto pages = fetch_pages(urls, cfg);
    REQUIRE(pages.size() == 4);

    CHECK(pages[0].http_status == 200);
    CHECK(pages[0].url == ts.url("/ok"));
    CHECK(pages[0].scripts == std::vector<std::string>{"var a=1;"});
    REQUIRE(pages[0].out_links.size() == 1);
    CHECK(pages[0].out_links[0] == ts.url("/x"));
    CHECK(pages[0].visible_text.find("hi") != std::string::npos);
    CHECK(pages[0].fetched_at > 0);

    CHECK(pages[1].http_status == kFetchInvalidUrl);
    CHECK(pages[1].html.empty());
    CHECK(pages[1].url == "not a url at all");

    CHECK(pages[2].http_status == kFetchConnectError);
    CHECK(pages[2].html.empty());

    CHECK(pages[3].http_status == 200);
}

TEST_CASE("fetch_pages input validation") {
    CHECK_THROWS_AS(fetch_pages({}, {}), InputError);
    CrawlConfig bad;
    bad.max_parallel = 0;
    CHECK_THROWS_AS(fetch_pages({"http://a.test/"}, bad), InputError);
    bad.max_parallel = 1;
    bad.timeout_s = 0.0;
    CHECK_THROWS_AS(fetch_pages({"http://a.test/"}, bad), InputError);
}

TEST_CASE("fetch_pages records non-HTML content type as failure") {
    TestServer ts;
    ts.svr.Get("/plain", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("just text", "text/plain");
    });
    ts.svr.Get("/xhtml", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html></html>", "application/xhtml+xml");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    auto pages = fetch_pages({ts.url("/plain"), ts.url("/xhtml")}, cfg);
    CHECK(pages[0].http_status == kFetchNotHtml);
    CHECK(pages[0].html.empty());
    CHECK(pages[1].http_status == 200);  // "html" substring accepted
}

TEST_CASE("fetch_pages enforces the body size cap") {
    TestServer ts;
    ts.svr.Get("/big", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(5000, 'x'), "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    cfg.max_body_bytes = 1000;
    auto pages = fetch_pages({ts.url("/big")}, cfg);
    CHECK(pages[0].http_status == kFetchTooLarge);
    CHECK(pages[0].html.empty());
}

TEST_CASE("fetch_pages times out slow servers") {
    TestServer ts;
    ts.svr.Get("/slow", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(kPage, "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    cfg.timeout_s = 0.25;
    auto started = std::chrono::steady_clock::now();
    auto pages = fetch_pages({ts.url("/slow")}, cfg);
    auto elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    CHECK(pages[0].http_status == kFetchTimeout);
    CHECK(pages[0].html.empty());
    CHECK(elapsed < 0.7);  // gave up well before the handler finished
}

TEST_CASE("fetch_pages keeps at most max_parallel requests in flight") {
    std::atomic<int> in_flight{0};
    std::atomic<int> max_seen{0};
    TestServer ts;
    ts.svr.Get("/work", [&](const httplib::Request&, httplib::Response& res) {
        int now = ++in_flight;
        int prev = max_seen.load();
        while (now > prev && !max_seen.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        --in_flight;
        res.set_content("<html></html>", "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;  // politeness off so parallelism is observable
    cfg.max_parallel = 3;
    std::vector<std::string> urls(12, ts.url("/work"));
    auto pages = fetch_pages(urls, cfg);
    for (const auto& p : pages) CHECK(p.http_status == 200);
    CHECK(max_seen.load() <= 3);
    CHECK(max_seen.load() >= 2);  // it did overlap
}

TEST_CASE("fetch_pages spaces same-origin requests by the politeness delay") {
    std::mutex mu;
    std::vector<std::chrono::steady_clock::time_point> arrivals;
    TestServer ts;
    ts.svr.Get("/t", [&](const httplib::Request&, httplib::Response& res) {
        {
            std::lock_guard<std::mutex> lock(mu);
            arrivals.push_back(std::chrono::steady_clock::now());
        }
        res.set_content("<html></html>", "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 120;
    cfg.max_parallel = 4;
    fetch_pages({ts.url("/t"), ts.url("/t"), ts.url("/t")}, cfg);

    REQUIRE(arrivals.size() == 3);
    std::sort(arrivals.begin(), arrivals.end());
    for (std::size_t i = 1; i < arrivals.size(); ++i) {
        auto gap = std::chrono::duration<double, std::milli>(arrivals[i] -
                                                             arrivals[i - 1])
                       .count();
        CHECK(gap >= 80.0);  // generous slop for scheduling jitter
    }
}

TEST_CASE("robots rules parsing") {
    auto rules = detail::parse_robots(
        "# comment\n"
        "User-Agent: *\n"
        "Disallow: /secret\n"
        "Disallow: /tmp/\n"
        "\n"
        "User-agent: specialbot\n"
        "Disallow: /\n");
    CHECK_FALSE(rules.allows("/secret"));
    CHECK_FALSE(rules.allows("/secret/page"));
    CHECK_FALSE(rules.allows("/tmp/x"));
    CHECK(rules.allows("/tmp"));      // prefix is "/tmp/"
    CHECK(rules.allows("/open"));     // specialbot's rules do not apply
    CHECK(rules.allows("/"));

    auto empty = detail::parse_robots("");
    CHECK(empty.allows("/anything"));
}

TEST_CASE("fetch_pages honors robots.txt when asked") {
    TestServer ts;
    ts.svr.Get("/robots.txt", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("User-agent: *\nDisallow: /secret\n", "text/plain");
    });
    ts.svr.Get("/secret/x", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPage, "text/html");
    });
    ts.svr.Get("/open", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPage, "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    cfg.respect_robots = true;
    auto pages = fetch_pages({ts.url("/secret/x"), ts.url("/open")}, cfg);
    CHECK(pages[0].http_status == kFetchRobotsDenied);
    CHECK(pages[0].html.empty());
    CHECK(pages[1].http_status == 200);

    cfg.respect_robots = false;
    auto unchecked = fetch_pages({ts.url("/secret/x")}, cfg);
    CHECK(unchecked[0].http_status == 200);
}

TEST_CASE("fetch_pages fetches external scripts only behind the flag") {
    TestServer ts;
    ts.svr.Get("/page", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "<html><head><script src='/a.js'></script></head>"
            "<body><script>inline();</script></body></html>",
            "text/html");
    });
    ts.svr.Get("/a.js", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("external();", "application/javascript");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    auto off = fetch_pages({ts.url("/page")}, cfg);
    CHECK(off[0].scripts == std::vector<std::string>{"inline();"});

    cfg.fetch_external_scripts = true;
    auto on = fetch_pages({ts.url("/page")}, cfg);
    CHECK(on[0].scripts ==
          std::vector<std::string>({"inline();", "external();"}));
}

TEST_CASE("fetch_pages follows redirects and keeps error-page bodies") {
    TestServer ts;
    ts.svr.Get("/redir", [&](const httplib::Request&, httplib::Response& res) {
        res.set_redirect("/ok");
    });
    ts.svr.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPage, "text/html");
    });
    ts.svr.Get("/gone", [](const httplib::Request&, httplib::Response& res) {
        res.status = 404;
        res.set_content("<html><body>missing</body></html>", "text/html");
    });
    ts.start();

    CrawlConfig cfg;
    cfg.per_host_delay_ms = 0;
    auto pages = fetch_pages({ts.url("/redir"), ts.url("/gone")}, cfg);
    CHECK(pages[0].http_status == 200);
    CHECK_FALSE(pages[0].html.empty());
    CHECK(pages[1].http_status == 404);
    CHECK(pages[1].visible_text.find("missing") != std::string::npos);
}
