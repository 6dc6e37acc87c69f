// siterep command-line front end: crawl, rate, extract, train, predict,
// evaluate, importance. Every artifact carries the schema version and a hash
// of the configuration that produced it; all randomness flows from --seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "siterep/crawl.hpp"
#include "siterep/eval.hpp"
#include "siterep/pipeline.hpp"
#include "siterep/wot_client.hpp"

namespace {

using namespace siterep;

// One line on stderr, no embedded newlines, stable "siterep: error: <class>:"
// prefix so scripts can match on it.
std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return s;
}

void print_error(const char* cls, const std::string& msg) {
    std::cerr << "siterep: error: " << cls << ": " << one_line(msg) << "\n";
}

// ---------------------------------------------------------------------------
// Option bags. CLI11 binds references, so these outlive parsing.

struct CrawlArgs {
    std::string urls_file;
    std::string out;
    CrawlConfig cfg;
};

struct RateArgs {
    std::string corpus;
    std::string dimension = "trust";
    std::string source = "fixture";
    std::string fixture;
    std::string out;
    bool pages_only = false;
    HttpRatingConfig http;
};

struct ExtractArgs {
    std::string corpus;
    std::string ratings;
    std::string dimension = "trust";
    ExtractConfig cfg;
    TopicConfig topics;
    bool no_topics = false;
    std::string topic_model_in;
    std::string topic_model_out;
    std::string stopwords;
    std::string dictionary;
    std::string schema_file;
    std::string patterns_file;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct LearnerArgs {
    EnsembleParams params;
    std::vector<std::string> families;
    std::string rule = "adaptive";
    std::string criterion = "gini";
    bool no_bootstrap = false;

    void resolve() {
        params.rule = rule_from_string(rule);
        if (criterion == "gini")
            params.forest.tree.criterion = SplitCriterion::gini;
        else if (criterion == "entropy")
            params.forest.tree.criterion = SplitCriterion::entropy;
        else
            throw InputError("unknown split criterion \"" + criterion +
                             "\" (expected gini|entropy)");
        params.forest.bootstrap = !no_bootstrap;
        if (!families.empty()) {
            params.enabled = {false, false, false, false};
            for (const auto& name : families)
                params.enabled[static_cast<std::size_t>(
                    family_from_string(name))] = true;
        }
    }

    json echo() const {
        json j;
        j["rule"] = rule;
        j["keep_fraction"] = params.keep_fraction;
        j["balance"] = params.balance;
        j["th"] = params.th.value;
        json fams = json::array();
        for (Family f : kAllFamilies)
            if (params.enabled[static_cast<std::size_t>(f)])
                fams.push_back(to_string(f));
        j["families"] = fams;
        j["n_trees"] = params.forest.n_trees;
        j["m_features"] = params.forest.m_features;
        j["bootstrap"] = params.forest.bootstrap;
        j["max_depth"] = params.forest.tree.max_depth;
        j["min_leaf"] = params.forest.tree.min_leaf;
        j["criterion"] = criterion;
        return j;
    }
};

struct TrainArgs {
    std::string features;
    std::string out;
    LearnerArgs learner;
    std::uint64_t seed = 0;
};

struct PredictArgs {
    std::string model;
    std::string input_file;
    std::string url;
    std::string ratings;
    std::string topic_model;
    ExtractConfig cfg;
    std::string schema_file;
    std::string patterns_file;
    std::optional<std::uint64_t> seed;
    bool as_json = false;
    CrawlConfig crawl;
};

struct EvaluateArgs {
    std::string features;
    std::string dimension = "trust";
    int folds = 10;
    std::vector<std::string> rules{"adaptive"};
    LearnerArgs learner;
    std::uint64_t seed = 0;
    double base_rate = 0.20;
    std::string report;
    std::string csv;
};

struct ImportanceArgs {
    std::string features;
    LearnerArgs learner;
    std::uint64_t seed = 0;
    std::string schema_file;
    int top = 0;  // 0: all
    bool as_json = false;
};

// ---------------------------------------------------------------------------
// Helpers shared by subcommands.

FeatureSchema load_schema_or_default(const std::string& path) {
    return path.empty() ? default_feature_schema() : load_feature_schema(path);
}

PatternConfig load_patterns_or_default(const std::string& path) {
    return path.empty() ? default_patterns() : load_patterns(path);
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed,
                           const char* why) {
    if (!seed)
        throw InputError(std::string("--seed is required: ") + why +
                         " is a seeded stochastic step");
    return *seed;
}

// Unique registrable hosts drawn from page URLs and (unless pages_only) every
// out-link, in first-appearance order so output files are reproducible.
std::vector<std::string> hosts_to_rate(const std::vector<PageRecord>& pages,
                                       bool pages_only) {
    std::vector<std::string> hosts;
    std::unordered_set<std::string> seen;
    auto push = [&](const std::string& url) {
        std::string key = rating_key(url);
        if (!key.empty() && seen.insert(key).second) hosts.push_back(key);
    };
    for (const auto& p : pages) {
        push(p.url);
        if (!pages_only)
            for (const auto& l : p.out_links) push(l);
    }
    return hosts;
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int run_crawl(const CrawlArgs& a) {
    std::ifstream in(a.urls_file);
    if (!in) throw InputError("cannot open url list " + a.urls_file);
    std::vector<std::string> urls;
    std::string line;
    while (std::getline(in, line)) {
        std::string u = std::string(trim(line));
        if (!u.empty() && u[0] != '#') urls.push_back(u);
    }
    if (urls.empty()) throw InputError("url list is empty: " + a.urls_file);

    json echo;
    echo["command"] = "crawl";
    echo["concurrency"] = a.cfg.max_parallel;
    echo["timeout_s"] = a.cfg.timeout_s;
    echo["per_host_delay_ms"] = a.cfg.per_host_delay_ms;
    echo["max_body_bytes"] = a.cfg.max_body_bytes;
    echo["user_agent"] = a.cfg.user_agent;
    echo["robots"] = a.cfg.respect_robots;
    echo["fetch_external_scripts"] = a.cfg.fetch_external_scripts;

    auto pages = fetch_pages(urls, a.cfg);
    write_corpus(a.out, pages, config_hash(echo));

    std::size_t ok = 0;
    for (const auto& p : pages)
        if (p.http_status > 0) ++ok;
    std::cout << "crawled " << pages.size() << " urls, " << ok
              << " fetched, wrote " << a.out << "\n";
    return 0;
}

int run_rate(const RateArgs& a) {
    Dimension dim = dimension_from_string(a.dimension);
    auto pages = read_corpus(a.corpus);
    auto hosts = hosts_to_rate(pages, a.pages_only);
    if (hosts.empty()) throw InputError("no hosts to rate in " + a.corpus);

    std::unique_ptr<RatingSource> source;
    if (a.source == "fixture") {
        if (a.fixture.empty())
            throw InputError("--source fixture requires --fixture FILE");
        source = std::make_unique<FixtureRatingSource>(a.fixture);
    } else if (a.source == "http") {
        if (a.http.endpoint.empty())
            throw InputError("--source http requires --endpoint URL");
        source = std::make_unique<HttpRatingSource>(a.http);
    } else {
        throw InputError("unknown rating source \"" + a.source +
                         "\" (expected fixture|http)");
    }

    json echo;
    echo["command"] = "rate";
    echo["dimension"] = to_string(dim);
    echo["source"] = a.source;
    echo["pages_only"] = a.pages_only;

    auto results = source->get_ratings(hosts, dim);
    std::vector<RatingRecord> records;
    for (const auto& r : results)
        if (r) records.push_back(*r);
    write_ratings(a.out, records, config_hash(echo));
    std::cout << "rated " << records.size() << " of " << hosts.size()
              << " hosts, wrote " << a.out << "\n";
    return 0;
}

int run_extract(ExtractArgs& a) {
    a.cfg.dimension = dimension_from_string(a.dimension);
    a.cfg.topics_enabled = !a.no_topics;
    auto pages = read_corpus(a.corpus);
    auto schema = load_schema_or_default(a.schema_file);
    auto patterns = load_patterns_or_default(a.patterns_file);

    std::unique_ptr<FixtureRatingSource> ratings;
    if (!a.ratings.empty())
        ratings = std::make_unique<FixtureRatingSource>(a.ratings);

    std::optional<TopicModel> model;
    json topic_echo;
    if (a.cfg.topics_enabled) {
        a.cfg.seed = require_seed(a.seed, "topic fold-in");
        if (!a.topic_model_in.empty()) {
            model = load_topic_model(a.topic_model_in);
            topic_echo["loaded_from"] = a.topic_model_in;
        } else {
            std::unordered_set<std::string> stop;
            if (!a.stopwords.empty()) stop = load_word_set(a.stopwords);
            std::optional<std::unordered_set<std::string>> dict;
            if (!a.dictionary.empty()) dict = load_word_set(a.dictionary);
            model = train_topic_model(pages, a.topics, stop,
                                      derive_seed(a.cfg.seed, "topic-train"),
                                      dict);
            topic_echo = a.topics.echo();
        }
        if (!a.topic_model_out.empty())
            save_topic_model(a.topic_model_out, *model);
    } else if (a.seed) {
        a.cfg.seed = *a.seed;
    }

    json echo;
    echo["command"] = "extract";
    echo["extract"] = a.cfg.echo();
    echo["topics"] = a.cfg.topics_enabled ? topic_echo : json();

    auto bundles = extract_bundles(pages, ratings.get(),
                                   model ? &*model : nullptr, a.cfg, schema,
                                   patterns);
    write_bundles(a.out, bundles, config_hash(echo));

    std::size_t labeled = 0;
    std::array<std::size_t, 4> have{};
    for (const auto& b : bundles) {
        if (b.label) ++labeled;
        for (Family f : kAllFamilies)
            if (b.has(f)) ++have[static_cast<std::size_t>(f)];
    }
    std::cout << "extracted " << bundles.size() << " bundles (" << labeled
              << " labeled; H " << have[0] << ", J " << have[1] << ", E "
              << have[2] << ", T " << have[3] << "), wrote " << a.out << "\n";
    return 0;
}

int run_train(TrainArgs& a) {
    a.learner.resolve();
    auto bundles = read_bundles(a.features);
    std::vector<FeatureBundle> labeled;
    for (auto& b : bundles)
        if (b.label) labeled.push_back(std::move(b));
    if (labeled.empty())
        throw InputError("no labeled bundles in " + a.features);

    auto ens = fit(labeled, a.learner.params, a.seed);

    json echo;
    echo["command"] = "train";
    echo["learner"] = a.learner.echo();
    echo["seed"] = a.seed;

    json j = to_json(ens);
    j["config_hash"] = config_hash(echo);
    write_json_file(a.out, j);

    std::cout << "trained on " << labeled.size() << " bundles (";
    bool first = true;
    for (Family f : kAllFamilies) {
        if (!ens.families[static_cast<std::size_t>(f)]) continue;
        if (!first) std::cout << ", ";
        std::cout << to_string(f);
        first = false;
    }
    std::cout << "), wrote " << a.out << "\n";
    return 0;
}

int run_predict(PredictArgs& a) {
    if (a.input_file.empty() && a.url.empty())
        throw InputError("predict needs --input FILE and/or --url URL");

    auto ens = load_ensemble(a.model);
    auto schema = load_schema_or_default(a.schema_file);
    auto patterns = load_patterns_or_default(a.patterns_file);

    PageRecord page;
    if (!a.input_file.empty()) {
        std::ifstream in(a.input_file, std::ios::binary);
        if (!in) throw InputError("cannot open " + a.input_file);
        std::string html((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        std::string base = a.url.empty() ? "http://local.invalid/" : a.url;
        page = parse_page(base, html);
    } else {
        page = fetch_pages({a.url}, a.crawl).front();
        if (page.http_status <= 0)
            throw TransportError("fetch failed for " + a.url + " (status " +
                                 std::to_string(page.http_status) + ")",
                                 false);
    }

    std::unique_ptr<FixtureRatingSource> ratings;
    if (!a.ratings.empty())
        ratings = std::make_unique<FixtureRatingSource>(a.ratings);
    std::optional<TopicModel> model;
    if (!a.topic_model.empty()) {
        model = load_topic_model(a.topic_model);
        a.cfg.seed = require_seed(a.seed, "topic fold-in");
    }
    a.cfg.topics_enabled = model.has_value();
    a.cfg.th = ens.params.th;

    auto bundles = extract_bundles({page}, ratings.get(),
                                   model ? &*model : nullptr, a.cfg, schema,
                                   patterns);
    auto result = classify(ens, bundles.front());

    if (a.as_json) {
        json j;
        j["url"] = page.url;
        j["label"] = to_string(result.label);
        j["belief_bad"] = result.belief.p_bad;
        json fams = json::object();
        for (Family f : kAllFamilies) {
            auto idx = static_cast<std::size_t>(f);
            json fj;
            fj["available"] = result.per_family[idx].has_value();
            if (result.per_family[idx]) {
                fj["p_bad"] = result.per_family[idx]->p_bad;
                fj["weight"] = *result.weight[idx];
            }
            fams[to_string(f)] = fj;
        }
        j["families"] = fams;
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    std::cout << "url: " << page.url << "\n"
              << "label: " << to_string(result.label) << "\n"
              << "belief(bad): " << result.belief.p_bad << "\n"
              << "families:\n";
    for (Family f : kAllFamilies) {
        auto idx = static_cast<std::size_t>(f);
        std::cout << "  " << to_string(f) << "  ";
        if (result.per_family[idx])
            std::cout << "available  weight " << *result.weight[idx]
                      << "  p_bad " << result.per_family[idx]->p_bad << "\n";
        else
            std::cout << "absent\n";
    }
    return 0;
}

int run_evaluate(EvaluateArgs& a) {
    a.learner.resolve();
    Dimension dim = dimension_from_string(a.dimension);
    auto all = read_bundles(a.features);
    std::vector<FeatureBundle> bundles;
    for (auto& b : all)
        if (b.label) bundles.push_back(std::move(b));
    if (bundles.empty())
        throw InputError("no labeled bundles in " + a.features);

    std::vector<EvalConfig> configs;
    for (const auto& rule : a.rules) {
        EvalConfig c;
        c.name = rule;
        c.params = a.learner.params;
        c.params.rule = rule_from_string(rule);
        configs.push_back(std::move(c));
    }

    auto rep = cross_validate(bundles, configs, a.folds, a.seed, a.base_rate);

    json echo;
    echo["command"] = "evaluate";
    echo["dimension"] = to_string(dim);
    echo["folds"] = a.folds;
    echo["rules"] = a.rules;
    echo["learner"] = a.learner.echo();
    echo["seed"] = a.seed;
    echo["base_rate"] = a.base_rate;

    json j = to_json(rep);
    j["dimension"] = to_string(dim);
    j["config_hash"] = config_hash(echo);
    write_json_file(a.report, j);
    if (!a.csv.empty()) {
        std::ofstream out(a.csv, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + a.csv);
        out << report_csv(rep);
    }

    for (const auto& c : rep.configs) {
        std::cout << c.name << ": avg_f1 " << c.report.avg_f1.value << ", fnr "
                  << c.report.fnr.value << ", fpr " << c.report.fpr.value
                  << ", detection " << c.detection.value;
        if (&c != &rep.configs.front())
            std::cout << ", mcnemar_p " << c.vs_baseline.p;
        std::cout << "\n";
    }
    std::cout << "wrote " << a.report << "\n";
    return 0;
}

int run_importance(ImportanceArgs& a) {
    a.learner.resolve();
    auto bundles = read_bundles(a.features);
    std::vector<FeatureBundle> labeled;
    for (auto& b : bundles)
        if (b.label) labeled.push_back(std::move(b));
    if (labeled.empty())
        throw InputError("no labeled bundles in " + a.features);

    auto schema = load_schema_or_default(a.schema_file);
    auto ens = fit(labeled, a.learner.params, a.seed);

    struct Row {
        std::string family;
        std::string name;
        double score;
    };
    std::vector<Row> rows;
    for (Family f : kAllFamilies) {
        const auto& fm = ens.families[static_cast<std::size_t>(f)];
        if (!fm) continue;
        auto names = family_feature_names(f, schema, fm->mask.keep.size());
        auto scores = feature_importance(fm->model);
        std::size_t kept_i = 0;
        for (std::size_t i = 0; i < fm->mask.keep.size(); ++i) {
            if (!fm->mask.keep[i]) continue;
            rows.push_back({to_string(f), names[i], scores[kept_i]});
            ++kept_i;
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.family != y.family) return x.family < y.family;
        return x.name < y.name;
    });
    if (a.top > 0 && rows.size() > static_cast<std::size_t>(a.top))
        rows.resize(static_cast<std::size_t>(a.top));

    if (a.as_json) {
        json arr = json::array();
        for (const auto& r : rows) {
            json j;
            j["family"] = r.family;
            j["feature"] = r.name;
            j["importance"] = r.score;
            arr.push_back(j);
        }
        std::cout << arr.dump(2) << "\n";
    } else {
        std::cout.setf(std::ios::fixed);
        std::cout.precision(6);
        for (const auto& r : rows)
            std::cout << r.score << "  " << r.family << "  " << r.name << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

void add_learner_options(CLI::App* cmd, LearnerArgs& l, bool with_rule) {
    if (with_rule)
        cmd->add_option("--rule", l.rule,
                        "Combination rule: adaptive|sum|product|or|voting");
    cmd->add_option("--families", l.families,
                    "Feature families to use, e.g. H,J,E,T (default all)")
        ->delimiter(',');
    cmd->add_option("--keep-fraction", l.params.keep_fraction,
                    "Correlation-mask keep fraction for H/J/T");
    cmd->add_flag("--balance", l.params.balance,
                  "Undersample the majority class before training");
    cmd->add_option("--th", l.params.th.value,
                    "Class threshold: rating < th is bad");
    cmd->add_option("--n-trees", l.params.forest.n_trees, "Trees per forest");
    cmd->add_option("--m-features", l.params.forest.m_features,
                    "Split candidates per node (-1: ceil(sqrt(d)))");
    cmd->add_flag("--no-bootstrap", l.no_bootstrap,
                  "Train each tree on the full sample");
    cmd->add_option("--max-depth", l.params.forest.tree.max_depth,
                    "Tree depth limit (-1: unlimited)");
    cmd->add_option("--min-leaf", l.params.forest.tree.min_leaf,
                    "Minimum samples per leaf");
    cmd->add_option("--criterion", l.criterion, "Split impurity: gini|entropy");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"siterep: predict crowdsourced web-safety ratings from page "
                 "structure, linked-site reputation, and text topics"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Config file (INI/TOML; [subcommand] sections; command-line "
                   "flags take precedence)");

    CrawlArgs ca;
    auto* crawl = app.add_subcommand("crawl", "Fetch pages into a corpus file");
    crawl->add_option("--urls", ca.urls_file, "File with one URL per line")
        ->required();
    crawl->add_option("--out", ca.out, "Corpus JSONL to write")->required();
    crawl->add_option("--concurrency", ca.cfg.max_parallel,
                      "Maximum parallel fetches");
    crawl->add_option("--timeout", ca.cfg.timeout_s, "Per-request timeout [s]");
    crawl->add_option("--per-host-delay", ca.cfg.per_host_delay_ms,
                      "Delay between hits on one host [ms]");
    crawl->add_option("--max-body-bytes", ca.cfg.max_body_bytes,
                      "Reject bodies larger than this");
    crawl->add_option("--user-agent", ca.cfg.user_agent, "User-Agent header");
    crawl->add_flag("--robots", ca.cfg.respect_robots,
                    "Honor robots.txt disallow rules");
    crawl->add_flag("--fetch-external-scripts", ca.cfg.fetch_external_scripts,
                    "Also download external script files");

    RateArgs ra;
    auto* rate = app.add_subcommand(
        "rate", "Look up safety ratings for a corpus' hosts");
    rate->add_option("--corpus", ra.corpus, "Corpus JSONL to rate")->required();
    rate->add_option("--dimension", ra.dimension, "trust|child");
    rate->add_option("--source", ra.source, "fixture|http");
    rate->add_option("--fixture", ra.fixture, "Rating fixture JSONL");
    rate->add_option("--endpoint", ra.http.endpoint, "Rating API endpoint URL");
    rate->add_option("--api-key", ra.http.api_key,
                     "API key (default: $" + std::string(kApiKeyEnvVar) + ")");
    rate->add_option("--chunk-size", ra.http.chunk_size, "Hosts per request");
    rate->add_option("--max-retries", ra.http.max_retries,
                     "Extra attempts per request");
    rate->add_option("--retry-backoff-ms", ra.http.retry_backoff_ms,
                     "Initial retry backoff [ms], doubled each retry");
    rate->add_option("--timeout", ra.http.timeout_s, "Request timeout [s]");
    rate->add_flag("--pages-only", ra.pages_only,
                   "Rate page hosts only, not out-link hosts");
    rate->add_option("--out", ra.out, "Ratings JSONL to write")->required();

    ExtractArgs ea;
    auto* extract = app.add_subcommand(
        "extract", "Turn a corpus plus ratings into feature bundles");
    extract->add_option("--corpus", ea.corpus, "Corpus JSONL")->required();
    extract->add_option("--ratings", ea.ratings,
                        "Ratings JSONL (labels + link features)");
    extract->add_option("--dimension", ea.dimension, "trust|child");
    extract->add_option("--th", ea.cfg.th.value,
                        "Class threshold: rating < th is bad");
    extract->add_option("--cr", ea.cfg.critical_override,
                        "Critical link rating C_r (default: tracks --th)");
    extract->add_option("--k", ea.cfg.ecdf_bins, "ECDF quantile count");
    extract->add_flag("--no-topics", ea.no_topics, "Skip topic features");
    extract->add_option("--topics", ea.topics.topics, "Topic count K");
    extract->add_option("--alpha", ea.topics.alpha,
                        "Dirichlet prior on topics (default 50/K)");
    extract->add_option("--eta", ea.topics.eta, "Dirichlet prior on words");
    extract->add_option("--iterations", ea.topics.train_sweeps,
                        "Gibbs training sweeps");
    extract->add_option("--min-df", ea.topics.min_df,
                        "Minimum document frequency for vocabulary");
    extract->add_option("--fold-in-sweeps", ea.cfg.fold_in_sweeps,
                        "Gibbs sweeps per page at feature time");
    extract->add_option("--topic-model", ea.topic_model_in,
                        "Reuse a saved topic model instead of training");
    extract->add_option("--save-topic-model", ea.topic_model_out,
                        "Write the topic model here");
    extract->add_option("--stopwords", ea.stopwords, "Stopword list file");
    extract->add_option("--dictionary", ea.dictionary,
                        "Keep only words from this list");
    extract->add_option("--schema", ea.schema_file, "Feature schema JSON");
    extract->add_option("--patterns", ea.patterns_file, "Pattern config JSON");
    extract->add_option("--seed", ea.seed, "Master seed (required with topics)");
    extract->add_option("--out", ea.out, "Feature bundles JSONL")->required();

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Fit the family ensemble");
    train->add_option("--features", ta.features, "Feature bundles JSONL")
        ->required();
    train->add_option("--out", ta.out, "Model JSON to write")->required();
    add_learner_options(train, ta.learner, /*with_rule=*/true);
    train->add_option("--seed", ta.seed, "Master seed")->required();

    PredictArgs pa;
    auto* predict = app.add_subcommand(
        "predict", "Score one page with a trained model");
    predict->add_option("--model", pa.model, "Model JSON")->required();
    predict->add_option("--input", pa.input_file, "Local HTML file");
    predict->add_option("--url", pa.url,
                        "Page URL (fetched unless --input is given, then used "
                        "as the base URL)");
    predict->add_option("--ratings", pa.ratings,
                        "Ratings JSONL for link features");
    predict->add_option("--topic-model", pa.topic_model,
                        "Topic model JSON for topic features");
    predict->add_option("--cr", pa.cfg.critical_override,
                        "Critical link rating C_r (default: model threshold)");
    predict->add_option("--k", pa.cfg.ecdf_bins, "ECDF quantile count");
    predict->add_option("--fold-in-sweeps", pa.cfg.fold_in_sweeps,
                        "Gibbs sweeps for topic fold-in");
    predict->add_option("--schema", pa.schema_file, "Feature schema JSON");
    predict->add_option("--patterns", pa.patterns_file, "Pattern config JSON");
    predict->add_option("--seed", pa.seed,
                        "Master seed (required with --topic-model)");
    predict->add_option("--timeout", pa.crawl.timeout_s,
                        "Fetch timeout [s] for --url");
    predict->add_flag("--json", pa.as_json, "Emit JSON instead of text");

    EvaluateArgs va;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Cross-validate configurations on labeled bundles");
    evaluate->add_option("--features", va.features, "Feature bundles JSONL")
        ->required();
    evaluate->add_option("--dimension", va.dimension,
                         "trust|child (recorded in the report)");
    evaluate->add_option("--folds", va.folds, "Stratified fold count");
    evaluate
        ->add_option("--rules", va.rules,
                     "Comma-separated combination rules to compare")
        ->delimiter(',');
    add_learner_options(evaluate, va.learner, /*with_rule=*/false);
    evaluate->add_option("--seed", va.seed, "Master seed")->required();
    evaluate->add_option("--base-rate", va.base_rate,
                         "Assumed bad-site base rate for detection rate");
    evaluate->add_option("--report", va.report, "Report JSON to write")
        ->required();
    evaluate->add_option("--csv", va.csv, "Also write per-config metrics CSV");

    ImportanceArgs ia;
    auto* importance = app.add_subcommand(
        "importance", "Rank features by forest impurity decrease");
    importance->add_option("--features", ia.features, "Feature bundles JSONL")
        ->required();
    add_learner_options(importance, ia.learner, /*with_rule=*/false);
    importance->add_option("--seed", ia.seed, "Master seed")->required();
    importance->add_option("--schema", ia.schema_file, "Feature schema JSON");
    importance->add_option("--top", ia.top, "Print only the top N features");
    importance->add_flag("--json", ia.as_json, "Emit JSON instead of text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (crawl->parsed()) return run_crawl(ca);
        if (rate->parsed()) return run_rate(ra);
        if (extract->parsed()) return run_extract(ea);
        if (train->parsed()) return run_train(ta);
        if (predict->parsed()) return run_predict(pa);
        if (evaluate->parsed()) return run_evaluate(va);
        if (importance->parsed()) return run_importance(ia);
        print_error("usage", "no subcommand selected");
        return 2;
    } catch (const InputError& e) {
        print_error("input", e.what());
        return 3;
    } catch (const SchemaError& e) {
        print_error("schema", e.what());
        return 4;
    } catch (const DataError& e) {
        print_error("data", e.what());
        return 5;
    } catch (const TransportError& e) {
        print_error("transport", e.what());
        return 6;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
