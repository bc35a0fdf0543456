#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "wsd/cli.hpp"
#include "wsd/runner.hpp"

using namespace wsd;
using nlohmann::json;
using wsd_test::make_instance;
using wsd_test::make_inventory;
using wsd_test::read_file;
using wsd_test::TempDir;
using wsd_test::write_file;

namespace {

/// A complete on-disk experiment: inventories, knowledge base, evaluation
/// corpus, scripted replies, and a config whose paths are all relative.
struct Workspace {
    TempDir dir;
    json config;

    std::filesystem::path config_path() const { return dir / "config.json"; }
    void write_config() const { write_file(dir / "config.json", config.dump(2)); }
};

void write_inventory_fixture(const TempDir& dir, const SenseInventory& inv,
                             const std::string& filename) {
    write_file(dir / ("fixtures/" + filename),
               detail::inventory_to_json(inv).dump(2) + "\n");
}

std::string scripted_line(const std::string& id, const std::string& text) {
    return json{{"instance_id", id}, {"raw_text", text}}.dump() + "\n";
}

std::vector<WsdInstance> standard_train() {
    return {
        make_instance("t1", "en", "money sat in the <WSD>bank</WSD> vault", "bank",
                      Pos::kNoun, "bank.noun.01"),
        make_instance("t2", "en", "the <WSD>bank</WSD> approved the loan", "bank",
                      Pos::kNoun, "bank.noun.01"),
        make_instance("t3", "en", "grass grew on the river <WSD>bank</WSD>", "bank",
                      Pos::kNoun, "bank.noun.02"),
        make_instance("t4", "en", "a steep <WSD>bank</WSD> of wet earth", "bank",
                      Pos::kNoun, "bank.noun.02"),
        make_instance("t5", "en", "we fished from the <WSD>bank</WSD>", "bank",
                      Pos::kNoun, "bank.noun.02"),
        make_instance("t6", "en", "a <WSD>bank</WSD> of fog rolled in", "bank",
                      Pos::kNoun, "bank.noun.03"),
        make_instance("t7", "de", "die <WSD>kiefer</WSD> im wald", "kiefer", Pos::kNoun,
                      "kiefer.noun.01"),
        make_instance("t8", "de", "der <WSD>kiefer</WSD> schmerzte", "kiefer", Pos::kNoun,
                      "kiefer.noun.02"),
        make_instance("t9", "de", "ein breiter <WSD>kiefer</WSD>", "kiefer", Pos::kNoun,
                      "kiefer.noun.02"),
    };
}

std::string standard_replies() {
    std::string replies;
    replies += scripted_line("e1", "The deposit context fits.\nANSWER: bank.noun.02");
    replies += scripted_line("e2", "ANSWER: bank.noun.02");
    replies += scripted_line("e3", "The river reading fits.\nANSWER: bank.noun.02");
    replies += scripted_line("e4", "ANSWER: bank.noun.03");
    replies += scripted_line("d1", "ANSWER: kiefer.noun.01");
    replies += scripted_line("d2", "I cannot decide between the readings here.");
    return replies;
}

/// en "bank" (3 senses, e2 answered wrongly), de "kiefer" (2 senses, d2
/// unparseable), plus one monosemous and one uncovered target.
Workspace make_workspace() {
    Workspace ws;
    write_inventory_fixture(ws.dir, make_inventory("bank", Pos::kNoun, "en", 3),
                            "en_bank.json");
    write_inventory_fixture(ws.dir, make_inventory("kiefer", Pos::kNoun, "de", 2),
                            "de_kiefer.json");
    write_inventory_fixture(ws.dir, make_inventory("mono", Pos::kNoun, "en", 1),
                            "en_mono.json");

    const std::vector<WsdInstance> train = standard_train();
    save_corpus(train, ws.dir / "train.jsonl");
    FewShotKb::build(train).save(ws.dir / "kb.json");

    const std::vector<WsdInstance> eval_set{
        make_instance("d1", "de", "die <WSD>kiefer</WSD> wuchs hoch", "kiefer",
                      Pos::kNoun, "kiefer.noun.01"),
        make_instance("d2", "de", "sein <WSD>kiefer</WSD> klemmte", "kiefer", Pos::kNoun,
                      "kiefer.noun.02"),
        make_instance("e1", "en", "deposits at the <WSD>bank</WSD> grew", "bank",
                      Pos::kNoun, "bank.noun.02"),
        make_instance("e2", "en", "the <WSD>bank</WSD> issued a card", "bank", Pos::kNoun,
                      "bank.noun.01"),
        make_instance("e3", "en", "reeds lined the <WSD>bank</WSD>", "bank", Pos::kNoun,
                      "bank.noun.02"),
        make_instance("e4", "en", "a <WSD>bank</WSD> of clouds", "bank", Pos::kNoun,
                      "bank.noun.03"),
        make_instance("m1", "en", "the <WSD>mono</WSD> case", "mono", Pos::kNoun,
                      "mono.noun.01"),
        make_instance("g1", "en", "a <WSD>ghost</WSD> word", "ghost", Pos::kNoun,
                      "ghost.noun.01"),
    };
    save_corpus(eval_set, ws.dir / "eval.jsonl");
    write_file(ws.dir / "replies.jsonl", standard_replies());

    ws.config = json{
        {"corpus", {{"path", "eval.jsonl"}}},
        {"kb", {{"path", "kb.json"}}},
        {"lexstore", {{"mode", "fixtures"}, {"fixtures", "fixtures"}}},
        {"backend",
         {{"kind", "scripted"}, {"model", "mock"}, {"fixtures", "replies.jsonl"}}},
        {"seed", 11},
        {"output", {{"dir", "out"}}},
    };
    ws.write_config();
    return ws;
}

json manifest_without_timestamps(const std::filesystem::path& path) {
    json doc = json::parse(read_file(path));
    doc.erase("started_at");
    doc.erase("finished_at");
    return doc;
}

} // namespace

TEST_CASE("run configs load with strict key checking") {
    Workspace ws = make_workspace();

    SECTION("a valid config resolves paths against its own directory") {
        const RunConfig config = RunConfig::load(ws.config_path());
        CHECK(config.corpus_path == ws.dir / "eval.jsonl");
        CHECK(config.kb_path == ws.dir / "kb.json");
        CHECK(config.lexstore_mode == LexstoreMode::kFixtures);
        CHECK(config.lexstore_fixtures == ws.dir / "fixtures");
        CHECK(config.lexstore_daily_limit == 1000);
        CHECK(config.model.backend_kind == BackendKind::kScripted);
        CHECK(config.model.model_name == "mock");
        CHECK(config.model.scripted_fixtures == ws.dir / "replies.jsonl");
        CHECK(config.strategies == std::vector<SamplingStrategy>{
                                       SamplingStrategy::kHighest,
                                       SamplingStrategy::kLowest,
                                       SamplingStrategy::kAverage});
        CHECK(config.seed == 11);
        CHECK(config.output_dir == ws.dir / "out");
        CHECK_FALSE(config.sample_count.has_value());
    }
    SECTION("an unknown top-level key is rejected by name") {
        ws.config["extra"] = 1;
        ws.write_config();
        CHECK_THROWS_WITH(RunConfig::load(ws.config_path()),
                          Catch::Matchers::ContainsSubstring("extra"));
    }
    SECTION("an unknown nested key names its section") {
        ws.config["corpus"]["colour"] = "red";
        ws.write_config();
        CHECK_THROWS_WITH(RunConfig::load(ws.config_path()),
                          Catch::Matchers::ContainsSubstring("colour") &&
                              Catch::Matchers::ContainsSubstring("corpus"));
    }
    SECTION("a missing section is rejected") {
        ws.config.erase("kb");
        ws.write_config();
        CHECK_THROWS_WITH(RunConfig::load(ws.config_path()),
                          Catch::Matchers::ContainsSubstring("kb"));
    }
    SECTION("an unknown lexstore mode is rejected") {
        ws.config["lexstore"]["mode"] = "carrier_pigeon";
        ws.write_config();
        CHECK_THROWS_WITH(RunConfig::load(ws.config_path()),
                          Catch::Matchers::ContainsSubstring("lexstore.mode"));
    }
    SECTION("http mode requires an endpoint") {
        ws.config["lexstore"] = json{{"mode", "http"}};
        ws.write_config();
        CHECK_THROWS_AS(RunConfig::load(ws.config_path()), ConfigError);
    }
    SECTION("strategies may be narrowed but not emptied") {
        ws.config["strategies"] = json::array({"average"});
        ws.write_config();
        CHECK(RunConfig::load(ws.config_path()).strategies ==
              std::vector<SamplingStrategy>{SamplingStrategy::kAverage});

        ws.config["strategies"] = json::array();
        ws.write_config();
        CHECK_THROWS_AS(RunConfig::load(ws.config_path()), ConfigError);

        ws.config["strategies"] = json::array({"sideways"});
        ws.write_config();
        CHECK_THROWS_WITH(RunConfig::load(ws.config_path()),
                          Catch::Matchers::ContainsSubstring("sideways"));
    }
    SECTION("sample_count must be positive") {
        ws.config["corpus"]["sample_count"] = 0;
        ws.write_config();
        CHECK_THROWS_AS(RunConfig::load(ws.config_path()), ConfigError);
    }
    SECTION("a scripted backend needs a fixtures file") {
        ws.config["backend"].erase("fixtures");
        ws.write_config();
        CHECK_THROWS_AS(RunConfig::load(ws.config_path()), ConfigError);
    }
    SECTION("a missing or malformed config file is a configuration error") {
        CHECK_THROWS_AS(RunConfig::load(ws.dir / "nope.json"), ConfigError);
        write_file(ws.dir / "broken.json", "{not json");
        CHECK_THROWS_AS(RunConfig::load(ws.dir / "broken.json"), ConfigError);
    }
}

TEST_CASE("scripted experiments produce identical artifacts on every run") {
    Workspace ws = make_workspace();
    RunConfig config = RunConfig::load(ws.config_path());

    config.output_dir = ws.dir / "out_a";
    const RunResult first = run_experiment(config);
    config.output_dir = ws.dir / "out_b";
    const RunResult second = run_experiment(config);

    // 6 eligible instances (monosemous and uncovered targets drop out) over
    // 3 strategies.
    REQUIRE(first.records.size() == 18);
    CHECK(first.records[0].instance_id == "d1");
    CHECK(first.records[0].strategy == SamplingStrategy::kHighest);
    CHECK(load_predictions(first.predictions_path).size() == 18);

    for (const std::string name :
         {"predictions.jsonl", "report.json", "report.csv", "report.md",
          "histogram_en.csv", "histogram_de.csv"}) {
        INFO(name);
        const std::string bytes = read_file(ws.dir / "out_a" / name);
        REQUIRE_FALSE(bytes.empty());
        CHECK(bytes == read_file(ws.dir / "out_b" / name));
    }
    CHECK(manifest_without_timestamps(ws.dir / "out_a" / "manifest.json") ==
          manifest_without_timestamps(ws.dir / "out_b" / "manifest.json"));

    SECTION("the manifest records the run inputs") {
        const json doc = json::parse(read_file(ws.dir / "out_a" / "manifest.json"));
        CHECK(doc.at("seed") == 11);
        CHECK(doc.at("corpus_digest") == sha256_file(ws.dir / "eval.jsonl"));
        CHECK(doc.at("kb_digest") == sha256_file(ws.dir / "kb.json"));
        CHECK(doc.at("parse_failure_count") == 3);
        bool miss_warning = false;
        for (const auto& warning : doc.at("warnings")) {
            if (warning.get<std::string>().find("ghost") != std::string::npos) {
                miss_warning = true;
            }
        }
        CHECK(miss_warning);
    }
    SECTION("scores and histograms reflect the scripted replies") {
        CHECK(read_file(ws.dir / "out_a" / "histogram_en.csv") ==
              "sense_count,instance_count\n3,4\n");
        CHECK(read_file(ws.dir / "out_a" / "histogram_de.csv") ==
              "sense_count,instance_count\n2,2\n");

        const json report = json::parse(read_file(ws.dir / "out_a" / "report.json"));
        REQUIRE(report.at("cells").size() == 6);
        for (const auto& cell : report.at("cells")) {
            // Replies do not vary by strategy, so every strategy ties as best.
            CHECK(cell.at("best") == true);
            if (cell.at("language") == "en") {
                CHECK(cell.at("micro_f1").get<double>() == Catch::Approx(0.75));
            } else {
                CHECK(cell.at("micro_f1").get<double>() == Catch::Approx(0.5));
                CHECK(cell.at("n_parse_failures") == 1);
            }
        }
    }
}

TEST_CASE("a frequency-biased backend exposes the strategy gap") {
    Workspace ws;
    write_inventory_fixture(ws.dir, make_inventory("crane", Pos::kNoun, "en", 4),
                            "en_crane.json");

    // Example frequencies 4, 7, 1, 1: the gold sense is the most frequent one
    // but not the first in canonical order.
    std::vector<WsdInstance> train;
    const std::vector<std::pair<std::string, int>> freqs{
        {"crane.noun.01", 4}, {"crane.noun.02", 7}, {"crane.noun.03", 1},
        {"crane.noun.04", 1}};
    int counter = 0;
    for (const auto& [sense, freq] : freqs) {
        for (int i = 0; i < freq; ++i) {
            train.push_back(make_instance(
                "t" + std::to_string(++counter), "en",
                "sentence " + std::to_string(counter) + " about a <WSD>crane</WSD>",
                "crane", Pos::kNoun, sense));
        }
    }
    FewShotKb::build(train).save(ws.dir / "kb.json");

    const std::vector<WsdInstance> eval_set{
        make_instance("c1", "en", "the <WSD>crane</WSD> lifted beams", "crane",
                      Pos::kNoun, "crane.noun.02"),
        make_instance("c2", "en", "a <WSD>crane</WSD> on the skyline", "crane",
                      Pos::kNoun, "crane.noun.02"),
        make_instance("c3", "en", "the <WSD>crane</WSD> swung slowly", "crane",
                      Pos::kNoun, "crane.noun.02"),
    };
    save_corpus(eval_set, ws.dir / "eval.jsonl");

    ws.config = json{
        {"corpus", {{"path", "eval.jsonl"}}},
        {"kb", {{"path", "kb.json"}}},
        {"lexstore", {{"mode", "fixtures"}, {"fixtures", "fixtures"}}},
        {"backend", {{"kind", "freq_oracle"}, {"model", "oracle"}}},
        {"output", {{"dir", "out"}}},
    };
    ws.write_config();

    const RunResult result = run_experiment(RunConfig::load(ws.config_path()));
    const ComparisonMatrix matrix = ComparisonMatrix::build(score_by_group(result.records));

    const auto f1 = [&](SamplingStrategy strategy) {
        const MatrixCell* cell = matrix.find("oracle", strategy, LanguageCode("en"));
        REQUIRE(cell != nullptr);
        return cell->score.micro_f1;
    };
    // Sharing at the highest frequency keeps the true majority visible; the
    // other rules flatten it into a tie that resolves to the wrong sense.
    CHECK(f1(SamplingStrategy::kHighest) == 1.0);
    CHECK(f1(SamplingStrategy::kLowest) == 0.0);
    CHECK(f1(SamplingStrategy::kAverage) == 0.0);
    CHECK(matrix.find("oracle", SamplingStrategy::kHighest, LanguageCode("en"))->best);
    CHECK_FALSE(matrix.find("oracle", SamplingStrategy::kLowest, LanguageCode("en"))->best);
}

TEST_CASE("the response cache lets a rerun finish without backend replies") {
    Workspace ws = make_workspace();
    ws.config["backend"]["response_cache"] = "rcache";
    ws.write_config();
    RunConfig config = RunConfig::load(ws.config_path());

    config.output_dir = ws.dir / "out_a";
    run_experiment(config);
    REQUIRE(std::filesystem::exists(ws.dir / "rcache"));
    std::vector<std::filesystem::path> cache_files;
    for (const auto& entry : std::filesystem::directory_iterator(ws.dir / "rcache")) {
        cache_files.push_back(entry.path());
    }
    REQUIRE_FALSE(cache_files.empty());

    // Every reply is cached, so the scripted fixture can disappear entirely.
    write_file(ws.dir / "replies.jsonl", "");
    config.output_dir = ws.dir / "out_b";
    run_experiment(config);
    CHECK(read_file(ws.dir / "out_a" / "predictions.jsonl") ==
          read_file(ws.dir / "out_b" / "predictions.jsonl"));

    // Dropping one cached reply forces exactly that instance back to the
    // backend, which now has nothing to say.
    std::sort(cache_files.begin(), cache_files.end());
    std::filesystem::remove(cache_files.front());
    config.output_dir = ws.dir / "out_c";
    CHECK_THROWS_AS(run_experiment(config), NotFoundError);

    write_file(ws.dir / "replies.jsonl", standard_replies());
    config.output_dir = ws.dir / "out_d";
    run_experiment(config);
    CHECK(read_file(ws.dir / "out_a" / "predictions.jsonl") ==
          read_file(ws.dir / "out_d" / "predictions.jsonl"));
}

TEST_CASE("sample_count draws a reproducible subset per language") {
    Workspace ws;
    write_inventory_fixture(ws.dir, make_inventory("bank", Pos::kNoun, "en", 3),
                            "en_bank.json");
    std::vector<WsdInstance> train;
    for (int i = 1; i <= 3; ++i) {
        train.push_back(make_instance("t" + std::to_string(i), "en",
                                      "training <WSD>bank</WSD> line " + std::to_string(i),
                                      "bank", Pos::kNoun,
                                      "bank.noun.0" + std::to_string(i)));
    }
    FewShotKb::build(train).save(ws.dir / "kb.json");

    std::vector<WsdInstance> eval_set;
    std::string replies;
    for (int i = 1; i <= 6; ++i) {
        const std::string id = "s" + std::to_string(i);
        eval_set.push_back(make_instance(id, "en",
                                         "eval <WSD>bank</WSD> line " + std::to_string(i),
                                         "bank", Pos::kNoun, "bank.noun.01"));
        replies += scripted_line(id, "ANSWER: bank.noun.01");
    }
    save_corpus(eval_set, ws.dir / "eval.jsonl");
    write_file(ws.dir / "replies.jsonl", replies);

    ws.config = json{
        {"corpus", {{"path", "eval.jsonl"}, {"sample_count", 3}}},
        {"kb", {{"path", "kb.json"}}},
        {"lexstore", {{"mode", "fixtures"}, {"fixtures", "fixtures"}}},
        {"backend",
         {{"kind", "scripted"}, {"model", "mock"}, {"fixtures", "replies.jsonl"}}},
        {"strategies", json::array({"highest"})},
        {"seed", 5},
        {"output", {{"dir", "out"}}},
    };
    ws.write_config();

    RunConfig config = RunConfig::load(ws.config_path());
    config.output_dir = ws.dir / "out_a";
    const RunResult first = run_experiment(config);
    REQUIRE(first.records.size() == 3);
    for (const PredictionRecord& record : first.records) {
        CHECK(record.instance_id.size() == 2);
        CHECK(record.instance_id[0] == 's');
    }

    config.output_dir = ws.dir / "out_b";
    run_experiment(config);
    CHECK(read_file(ws.dir / "out_a" / "predictions.jsonl") ==
          read_file(ws.dir / "out_b" / "predictions.jsonl"));
}

TEST_CASE("languages without eligible instances are skipped with a warning") {
    Workspace ws = make_workspace();
    write_inventory_fixture(ws.dir, make_inventory("seul", Pos::kNoun, "fr", 1),
                            "fr_seul.json");
    std::vector<WsdInstance> eval_set = load_corpus(ws.dir / "eval.jsonl");
    eval_set.push_back(make_instance("f1", "fr", "un mot <WSD>seul</WSD> ici", "seul",
                                     Pos::kNoun, "seul.noun.01"));
    save_corpus(eval_set, ws.dir / "eval.jsonl");
    ws.write_config();

    RunConfig config = RunConfig::load(ws.config_path());
    config.output_dir = ws.dir / "out";
    const RunResult result = run_experiment(config);

    for (const PredictionRecord& record : result.records) {
        CHECK(record.language.str() != "fr");
    }
    bool skipped = false;
    for (const std::string& warning : result.manifest.warnings) {
        if (warning.find("language 'fr'") != std::string::npos) skipped = true;
    }
    CHECK(skipped);
    CHECK_FALSE(std::filesystem::exists(ws.dir / "out" / "histogram_fr.csv"));
    CHECK(std::filesystem::exists(ws.dir / "out" / "histogram_en.csv"));
}

TEST_CASE("an empty or fully ineligible corpus aborts the run") {
    Workspace ws = make_workspace();
    SECTION("empty corpus") {
        write_file(ws.dir / "eval.jsonl", "");
        CHECK_THROWS_AS(run_experiment(RunConfig::load(ws.config_path())),
                        ValidationError);
    }
    SECTION("only monosemous targets") {
        save_corpus({make_instance("m1", "en", "the <WSD>mono</WSD> case", "mono",
                                   Pos::kNoun, "mono.noun.01")},
                    ws.dir / "eval.jsonl");
        CHECK_THROWS_AS(run_experiment(RunConfig::load(ws.config_path())),
                        ValidationError);
    }
}

TEST_CASE("the command line maps failures to exit codes") {
    Workspace ws = make_workspace();
    std::ostringstream out;
    std::ostringstream err;

    SECTION("help is not an error") {
        CHECK(cli::run({"--help"}, out, err) == 0);
        CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("kb"));
    }
    SECTION("argument errors exit 2") {
        CHECK(cli::run({}, out, err) == 2);
        CHECK(cli::run({"run", "--bogus"}, out, err) == 2);
        CHECK(cli::run({"score"}, out, err) == 2);
    }
    SECTION("a missing config exits 2") {
        CHECK(cli::run({"run", "-c", (ws.dir / "nope.json").string()}, out, err) == 2);
        CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("error:"));
    }
    SECTION("an unknown strategy override exits 2") {
        CHECK(cli::run({"run", "-c", ws.config_path().string(), "--strategy", "bogus"},
                       out, err) == 2);
    }
    SECTION("a missing corpus exits 3") {
        ws.config["corpus"]["path"] = "nope.jsonl";
        ws.write_config();
        CHECK(cli::run({"run", "-c", ws.config_path().string()}, out, err) == 3);
    }
    SECTION("an unreachable chat endpoint exits 4") {
        setenv("WSD_API_KEY", "test-key", 1);
        ws.config["backend"] = json{{"kind", "http"},
                                    {"model", "m"},
                                    {"endpoint", "http://127.0.0.1:9/v1"},
                                    {"retry_limit", 0},
                                    {"retry_base_delay_ms", 1},
                                    {"request_timeout_s", 2}};
        ws.write_config();
        CHECK(cli::run({"run", "-c", ws.config_path().string()}, out, err) == 4);
    }
    SECTION("score rejects missing or empty prediction files with 3") {
        CHECK(cli::run({"score", "-p", (ws.dir / "nope.jsonl").string(), "-o",
                        (ws.dir / "scored").string()},
                       out, err) == 3);
        write_file(ws.dir / "empty.jsonl", "");
        CHECK(cli::run({"score", "-p", (ws.dir / "empty.jsonl").string(), "-o",
                        (ws.dir / "scored").string()},
                       out, err) == 3);
    }
    SECTION("kb build maps every failure to 1") {
        save_corpus({make_instance("u1", "en", "no gold <WSD>bank</WSD> here", "bank",
                                   Pos::kNoun)},
                    ws.dir / "nogold.jsonl");
        CHECK(cli::run({"kb", "build", "-c", (ws.dir / "nogold.jsonl").string(), "-o",
                        (ws.dir / "kb2.json").string()},
                       out, err) == 1);
        CHECK(cli::run({"kb", "build", "-c", (ws.dir / "nope.jsonl").string(), "-o",
                        (ws.dir / "kb2.json").string()},
                       out, err) == 1);
    }
    SECTION("report propagates an uncovered lemma as 3") {
        // eval.jsonl contains the ghost target with no inventory fixture.
        CHECK(cli::run({"report", "-c", (ws.dir / "eval.jsonl").string(), "-f",
                        (ws.dir / "fixtures").string(), "-o",
                        (ws.dir / "rep").string()},
                       out, err) == 3);
    }
}

TEST_CASE("the command line drives a full experiment") {
    Workspace ws = make_workspace();
    std::ostringstream out;
    std::ostringstream err;

    SECTION("kb build reports per-language example counts") {
        REQUIRE(cli::run({"kb", "build", "-c", (ws.dir / "train.jsonl").string(), "-o",
                          (ws.dir / "kb2.json").string()},
                         out, err) == 0);
        CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring(
                                  "en: 1 lemma entries, 6 examples"));
        CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring(
                                  "de: 1 lemma entries, 3 examples"));
        CHECK_THAT(out.str(),
                   Catch::Matchers::ContainsSubstring("bank (noun): 6 examples"));
        CHECK(read_file(ws.dir / "kb2.json") == read_file(ws.dir / "kb.json"));
    }
    SECTION("kb build accepts an empty corpus with a warning") {
        write_file(ws.dir / "empty.jsonl", "");
        REQUIRE(cli::run({"kb", "build", "-c", (ws.dir / "empty.jsonl").string(), "-o",
                          (ws.dir / "kb_empty.json").string()},
                         out, err) == 0);
        CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("warning:"));
        CHECK(std::filesystem::exists(ws.dir / "kb_empty.json"));
    }
    SECTION("run honors strategy and seed overrides") {
        REQUIRE(cli::run({"run", "-c", ws.config_path().string(), "--strategy",
                          "highest", "--strategy", "average", "--seed", "7"},
                         out, err) == 0);
        CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("12 predictions"));
        CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("inventory miss"));

        const std::string predictions = read_file(ws.dir / "out" / "predictions.jsonl");
        CHECK_THAT(predictions, Catch::Matchers::ContainsSubstring("\"highest\""));
        CHECK_THAT(predictions, Catch::Matchers::ContainsSubstring("\"average\""));
        CHECK_THAT(predictions,
                   !Catch::Matchers::ContainsSubstring("\"lowest\""));
        const json manifest =
            json::parse(read_file(ws.dir / "out" / "manifest.json"));
        CHECK(manifest.at("seed") == 7);

        std::ostringstream score_out;
        REQUIRE(cli::run({"score", "-p",
                          (ws.dir / "out" / "predictions.jsonl").string(), "-o",
                          (ws.dir / "scored").string()},
                         score_out, err) == 0);
        CHECK_THAT(score_out.str(), Catch::Matchers::ContainsSubstring("micro-F1"));
        CHECK(std::filesystem::exists(ws.dir / "scored" / "report.json"));
        CHECK(std::filesystem::exists(ws.dir / "scored" / "report.csv"));
        CHECK(std::filesystem::exists(ws.dir / "scored" / "report.md"));
    }
    SECTION("report writes per-language polysemy histograms") {
        REQUIRE(cli::run({"report", "-c", (ws.dir / "train.jsonl").string(), "-f",
                          (ws.dir / "fixtures").string(), "-o",
                          (ws.dir / "rep").string()},
                         out, err) == 0);
        CHECK(read_file(ws.dir / "rep" / "histogram_en.csv") ==
              "sense_count,instance_count\n3,6\n");
        CHECK(read_file(ws.dir / "rep" / "histogram_de.csv") ==
              "sense_count,instance_count\n2,3\n");
    }
}
