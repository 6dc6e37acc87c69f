#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "siterep/rng.hpp"
#include "siterep/structural.hpp"

using namespace siterep;

namespace {

const FeatureSchema& schema() {
    static FeatureSchema s = default_feature_schema();
    return s;
}

const PatternConfig& patterns() {
    static PatternConfig p = default_patterns();
    return p;
}

std::map<std::string, double> html_map(const PageRecord& page) {
    auto vec = extract_html(page, schema(), patterns());
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < vec.size(); ++i)
        out[schema().html_features[i]] = vec[i];
    return out;
}

std::map<std::string, double> js_map(const PageRecord& page) {
    auto vec = extract_js(page, schema(), patterns());
    REQUIRE(vec.has_value());
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < vec->size(); ++i)
        out[schema().js_features[i]] = (*vec)[i];
    return out;
}

PageRecord page_of(const std::string& html) {
    return parse_page("http://t.test/", html);
}

}  // namespace

TEST_CASE("html feature vector has schema length and order") {
    auto vec = extract_html(page_of("<p>x</p>"), schema(), patterns());
    CHECK(vec.size() == 20);
    CHECK(schema().html_features.size() == 20);
    CHECK(schema().js_features.size() == 24);
}

TEST_CASE("iframe and script counts") {
    auto m = html_map(page_of("<iframe src='a'></iframe><script>x=1</script>"));
    CHECK(m["iframe_count"] == 1.0);
    CHECK(m["script_element_count"] == 1.0);
}

TEST_CASE("empty html yields all zeros") {
    auto vec = extract_html(page_of(""), schema(), patterns());
    for (double v : vec) CHECK(v == 0.0);
}

TEST_CASE("unknown tag percentage: 3 known + 1 unknown = 25%") {
    auto m = html_map(page_of("<div></div><p></p><span></span><blink></blink>"));
    CHECK(m["unknown_tag_pct"] == 25.0);
    CHECK(m["element_count"] == 4.0);
}

TEST_CASE("hidden elements: attribute, style, hidden input") {
    auto m = html_map(page_of(
        "<div hidden></div>"
        "<div style='display: none'></div>"
        "<span style=\"VISIBILITY: Hidden\"></span>"
        "<input type='hidden' name='x'>"
        "<div style='display:block'></div>"));
    CHECK(m["hidden_element_count"] == 4.0);
}

TEST_CASE("small render area counts both tiny dimensions") {
    auto m = html_map(page_of(
        "<img width='1' height='1'>"
        "<iframe width=0 height=0></iframe>"
        "<img width='2px' height='2px'>"
        "<img width='10' height='10'>"
        "<img width='1'>"));  // only one dimension given: not counted
    CHECK(m["small_area_element_count"] == 3.0);
}

TEST_CASE("meta refresh, forms, embeds, links, imgs, anchors") {
    auto m = html_map(page_of(
        "<meta http-equiv='refresh' content='0;url=http://x.test/'>"
        "<meta charset='utf-8'>"
        "<form action='/'></form>"
        "<embed src='f.swf'><object data='o'></object>"
        "<link rel='stylesheet' href='s.css'>"
        "<img src='i.png'><a href='http://y.test/'>y</a>"));
    CHECK(m["meta_refresh_count"] == 1.0);
    CHECK(m["form_count"] == 1.0);
    CHECK(m["embed_object_count"] == 2.0);
    CHECK(m["link_count"] == 1.0);
    CHECK(m["img_count"] == 1.0);
    CHECK(m["anchor_count"] == 1.0);
}

TEST_CASE("out-of-place head tags counted only after body opens") {
    auto m = html_map(page_of(
        "<html><head><title>t</title><meta charset='x'></head>"
        "<body><p>ok</p><title>sneaky</title><meta name='y'></body></html>"));
    CHECK(m["out_of_place_tag_count"] == 2.0);
    CHECK(m["title_present_flag"] == 1.0);
}

TEST_CASE("double document tags counted beyond the first") {
    auto m = html_map(page_of(
        "<html><body></body></html><html><body></body><body></body></html>"));
    // html twice -> 1 extra; body three times -> 2 extra.
    CHECK(m["double_doc_tag_count"] == 3.0);
}

TEST_CASE("char count, whitespace pct, comment chars, external scripts") {
    PageRecord p = page_of("<!--abcd--><script src='http://c.test/x.js'></script>");
    auto m = html_map(p);
    CHECK(m["char_count"] == static_cast<double>(p.html.size()));
    CHECK(m["comment_char_count"] == 4.0);
    CHECK(m["external_script_src_count"] == 1.0);

    auto w = html_map(page_of("<p>a b</p>"));  // exactly 1 space in 10 chars
    CHECK(w["whitespace_pct"] == 10.0);
}

TEST_CASE("malicious pattern count from the pattern file") {
    auto m = html_map(page_of(
        "<script>eval(unescape('%68%69'));document.write(unescape('x'))</script>"));
    CHECK(m["malicious_pattern_count"] == 2.0);
}

TEST_CASE("title flag is boolean") {
    CHECK(html_map(page_of("<title>t</title>"))["title_present_flag"] == 1.0);
    CHECK(html_map(page_of("<p>t</p>"))["title_present_flag"] == 0.0);
}

// --- JS family ---

TEST_CASE("js vector absent when a page has no scripts") {
    CHECK_FALSE(extract_js(page_of("<p>plain</p>"), schema(), patterns()).has_value());
}

TEST_CASE("eval and timer counts: worked example") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"eval(x);eval(y);setTimeout(f,9);"};
    auto m = js_map(p);
    CHECK(m["eval_count"] == 2.0);
    CHECK(m["settimeout_setinterval_count"] == 1.0);
}

TEST_CASE("direct assignment count: worked example") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"var a=1;var b=2;"};
    CHECK(js_map(p)["direct_assignment_count"] == 2.0);
}

TEST_CASE("comparison and compound operators are not assignments") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"if(a==b||c===d||e<=f||g>=h||i!=j){k+=1;l-=2;m*=3;} var n=(x)=>x;"};
    // Only "var n=" is a plain assignment; the arrow is not.
    CHECK(js_map(p)["direct_assignment_count"] == 1.0);
}

TEST_CASE("assignments inside strings and comments are ignored") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"var s='a=b=c'; // x=1\n/* y=2 */ var t=2;"};
    CHECK(js_map(p)["direct_assignment_count"] == 2.0);
}

TEST_CASE("string literal statistics") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"var a='abc'; var b=\"defghij\"; var c='';"};
    auto m = js_map(p);
    CHECK(m["string_max_len"] == 7.0);
    CHECK(m["string_avg_len"] == Catch::Approx((3.0 + 7.0 + 0.0) / 3.0));
}

TEST_CASE("document.write detection requires the document receiver") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"document.write('a');document . writeln('b');other.write('c');"};
    CHECK(js_map(p)["document_write_count"] == 2.0);
}

TEST_CASE("dom modification, events, setattribute, activex") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {
        "var e=document.createElement('iframe');"
        "document.body.appendChild(e);"
        "e.setAttribute('src','http://x.test/');"
        "window.addEventListener('load',f);"
        "new ActiveXObject('WScript.Shell');"};
    auto m = js_map(p);
    CHECK(m["dom_modification_fn_count"] == 2.0);  // createElement + appendChild
    CHECK(m["setattribute_count"] == 1.0);
    CHECK(m["event_attachment_count"] == 1.0);
    CHECK(m["activex_like_count"] == 1.0);
    CHECK(m["iframe_injection_string_count"] == 0.0);  // 'iframe' literal lacks '<'
}

TEST_CASE("iframe injection strings found inside literals") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"document.write('<IFRAME src=x>' + '</x>' + '%3CIFRAME');"};
    CHECK(js_map(p)["iframe_injection_string_count"] == 2.0);
}

TEST_CASE("escape sequence and fromCharCode counting") {
    PageRecord p;
    p.url = "http://t.test/";
    // "A" spelled with an escaped backslash: a raw "\u" in source would
    // be consumed by the compiler as a universal character name.
    p.scripts = {"var s='\\x41\\x42'+'\\u0041'+unescape('%u9090');"
                 "String.fromCharCode(72,105);"};
    auto m = js_map(p);
    CHECK(m["hex_or_unicode_escape_count"] == 4.0);
    CHECK(m["fromcharcode_count"] == 1.0);
    CHECK(m["unescape_count"] == 1.0);
    CHECK(m["escape_count"] == 0.0);  // unescape does not count as escape
    CHECK(m["suspicious_string_count"] >= 1.0);  // %u9090 is in the pattern list
}

TEST_CASE("shellcode-like literal detection") {
    PageRecord p;
    p.url = "http://t.test/";
    std::string sc = "var s=\"";
    for (int i = 0; i < 20; ++i) sc += "\\x90";
    sc += "\";var ok='hello world';";
    p.scripts = {sc};
    CHECK(js_map(p)["shellcode_like_string_count"] == 1.0);
}

TEST_CASE("keyword ratio, long names, functions, comments, whitespace") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"function f() { var x = 1; return x; } // c\n"
                 "var averyveryverylongidentifiernamegoeshere = 2;"};
    auto m = js_map(p);
    CHECK(m["function_count"] == 1.0);
    CHECK(m["long_variable_name_count"] == 1.0);
    // words: function,f,var,x,return,x,var,<long> = 8; keywords: function,var,return,var = 4
    CHECK(m["keyword_to_word_ratio"] == Catch::Approx(0.5));
    CHECK(m["comment_to_code_ratio"] > 0.0);
    CHECK(m["comment_to_code_ratio"] <= 1.0);
    CHECK(m["whitespace_pct"] > 0.0);
    CHECK(m["whitespace_pct"] < 100.0);
}

TEST_CASE("entropy is zero for empty and bounded by 8 bits") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"aaaaaaaa"};
    CHECK(js_map(p)["entropy_of_script"] == 0.0);
    p.scripts = {"abcdefgh"};
    CHECK(js_map(p)["entropy_of_script"] == Catch::Approx(3.0));
    Rng rng(1);
    std::string noisy;
    for (int i = 0; i < 4096; ++i) noisy += static_cast<char>(rng.below(256));
    p.scripts = {noisy};
    double h = js_map(p)["entropy_of_script"];
    CHECK(h > 7.5);
    CHECK(h <= 8.0);
}

TEST_CASE("script_char_count sums raw script sizes") {
    PageRecord p;
    p.url = "http://t.test/";
    p.scripts = {"12345", "123"};
    CHECK(js_map(p)["script_char_count"] == 8.0);
}

TEST_CASE("extraction is deterministic") {
    auto p = page_of("<script>eval(unescape('%u9090'))</script><iframe></iframe>");
    CHECK(extract_html(p, schema(), patterns()) ==
          extract_html(p, schema(), patterns()));
    CHECK(extract_js(p, schema(), patterns()) == extract_js(p, schema(), patterns()));
}

TEST_CASE("unknown schema feature name is rejected") {
    FeatureSchema bad = schema();
    bad.html_features.push_back("made_up_feature");
    CHECK_THROWS_AS(extract_html(page_of("<p>x</p>"), bad, patterns()), InputError);
}

// --- feature selection ---

TEST_CASE("perfectly correlated column is ranked first") {
    std::vector<std::vector<double>> X;
    std::vector<ClassLabel> y;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        bool bad = i % 2 == 0;
        y.push_back(bad ? ClassLabel::bad : ClassLabel::good);
        X.push_back({rng.real01(), bad ? 1.0 : 0.0, rng.real01()});
    }
    auto mask = select_features(X, y, 0.34);  // keep ceil(1.02)=2? no: ceil(3*0.34)=2
    CHECK(mask.kept() == 2);
    CHECK(mask.keep[1]);  // the label-copy column always survives
    CHECK(mask.scores[1] == Catch::Approx(1.0));
}

TEST_CASE("keep_fraction=1 keeps everything; 0.75 of 20 keeps 15") {
    std::vector<std::vector<double>> X;
    std::vector<ClassLabel> y;
    Rng rng(9);
    for (int i = 0; i < 30; ++i) {
        y.push_back(i < 15 ? ClassLabel::bad : ClassLabel::good);
        std::vector<double> row;
        for (int f = 0; f < 20; ++f) row.push_back(rng.real01());
        X.push_back(row);
    }
    CHECK(select_features(X, y, 1.0).kept() == 20);
    CHECK(select_features(X, y, 0.75).kept() == 15);
}

TEST_CASE("scaling a column does not change the selection") {
    std::vector<std::vector<double>> X;
    std::vector<ClassLabel> y;
    Rng rng(12);
    for (int i = 0; i < 60; ++i) {
        bool bad = rng.real01() < 0.5;
        y.push_back(bad ? ClassLabel::bad : ClassLabel::good);
        X.push_back({rng.normal() + (bad ? 1.0 : 0.0), rng.normal(),
                     rng.normal() + (bad ? 0.5 : 0.0), rng.normal()});
    }
    auto base = select_features(X, y, 0.5);
    for (auto& row : X) row[2] *= 1000.0;
    auto scaled = select_features(X, y, 0.5);
    CHECK(base.keep == scaled.keep);
}

TEST_CASE("zero-variance columns rank last") {
    std::vector<std::vector<double>> X;
    std::vector<ClassLabel> y;
    Rng rng(15);
    for (int i = 0; i < 20; ++i) {
        y.push_back(i % 2 ? ClassLabel::bad : ClassLabel::good);
        X.push_back({7.0, rng.real01()});  // column 0 constant
    }
    auto mask = select_features(X, y, 0.5);
    CHECK(mask.kept() == 1);
    CHECK_FALSE(mask.keep[0]);
    CHECK(mask.keep[1]);
}

TEST_CASE("ties break toward the lower feature index") {
    // Two identical columns: equal |corr|, index 0 must win.
    std::vector<std::vector<double>> X;
    std::vector<ClassLabel> y;
    for (int i = 0; i < 10; ++i) {
        double v = i < 5 ? 0.0 : 1.0;
        y.push_back(i < 5 ? ClassLabel::bad : ClassLabel::good);
        X.push_back({v, v});
    }
    auto mask = select_features(X, y, 0.5);
    CHECK(mask.keep[0]);
    CHECK_FALSE(mask.keep[1]);
}

TEST_CASE("single-class input is rejected") {
    std::vector<std::vector<double>> X = {{1.0}, {2.0}};
    std::vector<ClassLabel> y = {ClassLabel::bad, ClassLabel::bad};
    CHECK_THROWS_AS(select_features(X, y, 0.5), InputError);
}

TEST_CASE("mask application filters by kept positions") {
    FeatureMask m;
    m.keep = {true, false, true};
    m.scores = {0.9, 0.1, 0.5};
    CHECK(m.apply({10, 20, 30}) == std::vector<double>{10, 30});
    CHECK_THROWS_AS(m.apply({1, 2}), DataError);
    CHECK(FeatureMask::all_true(3).apply({1, 2, 3}) == std::vector<double>{1, 2, 3});
}

TEST_CASE("mask JSON round trip") {
    FeatureMask m;
    m.keep = {true, false, true, true};
    m.scores = {0.25, 0.0, 1.0, 0.125};
    auto back = mask_from_json(to_json(m));
    CHECK(back == m);
}
