#include <cstdio>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "test_util.h"

using nlohmann::json;
using rnnt::test::read_file;
using rnnt::test::read_json;
using rnnt::test::run_command;
using rnnt::test::validate_schema;

namespace {

const std::string kCli = RNNT_CLI_PATH;
const std::string kGoldenModel = rnnt::test::fixtures_dir() + "/golden_2x3_model.json";

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/rnnt_cli_test_XXXXXX";
    path = mkdtemp(tmpl);
  }
  ~TempDir() { (void)run_command("rm -rf " + path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::string quiet(const std::string& cmd) { return cmd + " 2>/dev/null"; }
std::string merged(const std::string& cmd) { return cmd + " 2>&1"; }

}  // namespace

TEST_CASE("gen is byte-deterministic in the seed") {
  TempDir dir;
  const std::string gen =
      kCli + " gen --seed 9 --n-frames 25 --feature-dim 3 --vocab-size 4" +
      " --out-model " + dir.file("m.json") + " --out-features " + dir.file("f.feat") +
      " --out-workload " + dir.file("w.json") + " --n-utterances 5";
  REQUIRE(run_command(quiet(gen)).exit_code == 0);
  const auto model_a = read_file(dir.file("m.json"));
  const auto feat_a = read_file(dir.file("f.feat"));
  const auto work_a = read_file(dir.file("w.json"));
  REQUIRE(run_command(quiet(gen)).exit_code == 0);
  CHECK(read_file(dir.file("m.json")) == model_a);
  CHECK(read_file(dir.file("f.feat")) == feat_a);
  CHECK(read_file(dir.file("w.json")) == work_a);
}

TEST_CASE("gen accepts zero frames and the result decodes to the empty transcript") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 1 --n-frames 0 --feature-dim 1 --out-features " +
                            dir.file("empty.feat")))
              .exit_code == 0);
  const auto result = run_command(quiet(kCli + " decode --model " + kGoldenModel +
                                        " --features " + dir.file("empty.feat") + " --json"));
  REQUIRE(result.exit_code == 0);
  const json out = json::parse(result.out);
  CHECK(out["transcript"] == "");
  CHECK(out["score"] == 0.0);
  CHECK(out["stats"]["frames"] == 0);
}

TEST_CASE("decode reproduces the golden transcript and validates the schema") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 1 --n-frames 2 --feature-dim 1 --out-features " +
                            dir.file("g.feat")))
              .exit_code == 0);

  const std::string base = kCli + " decode --model " + kGoldenModel + " --features " +
                           dir.file("g.feat") +
                           " --beam 2 --expand-beam 2.3 --state-beam 4.6 --max-symbols 2";

  SUBCASE("plain output is the transcript") {
    const auto plain = run_command(quiet(base));
    REQUIRE(plain.exit_code == 0);
    CHECK(plain.out == "a\n");
  }

  SUBCASE("json output carries the hand-traced stats") {
    const auto result = run_command(quiet(base + " --json"));
    REQUIRE(result.exit_code == 0);
    const json out = json::parse(result.out);
    CHECK(out["transcript"] == "a");
    CHECK(std::abs(out["score"].get<double>() - (-0.9370292970235555)) <= 1e-12);
    CHECK(out["stats"]["joiner_calls"] == 4);
    CHECK(out["stats"]["expansions_pruned"] == 1);

    const auto errors =
        validate_schema(out, read_json(rnnt::test::schemas_dir() + "/decode_stats.schema.json"));
    for (const auto& e : errors) FAIL_CHECK(e);
    CHECK(errors.empty());
  }

  SUBCASE("omitted beam flags mean the unpruned search") {
    const std::string unpruned = kCli + " decode --model " + kGoldenModel + " --features " +
                                 dir.file("g.feat") + " --beam 2 --max-symbols 2 --json";
    const auto result = run_command(quiet(unpruned));
    REQUIRE(result.exit_code == 0);
    const json out = json::parse(result.out);
    CHECK(out["config"]["expand_beam"] == "inf");
    CHECK(out["config"]["state_beam"] == "inf");
    CHECK(out["stats"]["expansions_pruned"] == 0);
    CHECK(out["stats"]["state_beam_breaks"] == 0);
  }
}

TEST_CASE("exit codes are contracted: 2 for missing files, 3 for bad config") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 1 --n-frames 2 --feature-dim 1 --out-features " +
                            dir.file("g.feat")))
              .exit_code == 0);

  SUBCASE("missing feature file") {
    const auto r = run_command(merged(kCli + " decode --model " + kGoldenModel +
                                      " --features /tmp/definitely_missing.feat"));
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("error") != std::string::npos);
  }
  SUBCASE("missing model file") {
    const auto r = run_command(merged(kCli + " decode --model /tmp/missing_model.json" +
                                      " --features " + dir.file("g.feat")));
    CHECK(r.exit_code == 2);
  }
  SUBCASE("DT not a multiple of the frame shift") {
    const auto r = run_command(merged(kCli + " decode --model " + kGoldenModel + " --features " +
                                      dir.file("g.feat") + " --dt-ms 805"));
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("multiple of frame shift") != std::string::npos);
  }
  SUBCASE("DT not clearing the right context") {
    const auto r = run_command(merged(kCli + " decode --model " + kGoldenModel + " --features " +
                                      dir.file("g.feat") + " --dt-ms 100 --rc-frames 20"));
    CHECK(r.exit_code == 3);
  }
  SUBCASE("invalid beam width") {
    const auto r = run_command(merged(kCli + " decode --model " + kGoldenModel + " --features " +
                                      dir.file("g.feat") + " --beam 0"));
    CHECK(r.exit_code == 3);
  }
}

TEST_CASE("the model can come from the environment") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 1 --n-frames 2 --feature-dim 1 --out-features " +
                            dir.file("g.feat")))
              .exit_code == 0);
  const auto r = run_command(quiet("RNNT_MODEL=" + kGoldenModel + " " + kCli +
                                   " decode --features " + dir.file("g.feat")));
  CHECK(r.exit_code == 0);
  const auto missing = run_command(merged(kCli + " decode --features " + dir.file("g.feat")));
  CHECK(missing.exit_code == 3);
}

TEST_CASE("compare reports agreement, counters and the oracle") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 5 --n-frames 2 --feature-dim 1 --out-features " +
                            dir.file("g.feat")))
              .exit_code == 0);
  const json schema = read_json(rnnt::test::schemas_dir() + "/compare.schema.json");

  SUBCASE("infinite beams agree with equal counters") {
    const auto r = run_command(quiet(kCli + " compare --model " + kGoldenModel + " --features " +
                                     dir.file("g.feat") + " --beam 2 --max-symbols 2"));
    REQUIRE(r.exit_code == 0);
    const json out = json::parse(r.out);
    CHECK(out["agree"] == true);
    CHECK(out["joiner_calls_pruned"] == out["joiner_calls_reference"]);
    CHECK(validate_schema(out, schema).empty());
  }

  SUBCASE("oracle fields appear on request") {
    const auto r = run_command(quiet(kCli + " compare --model " + kGoldenModel + " --features " +
                                     dir.file("g.feat") +
                                     " --beam 2 --expand-beam 2.3 --state-beam 4.6"
                                     " --max-symbols 2 --oracle"));
    REQUIRE(r.exit_code == 0);
    const json out = json::parse(r.out);
    REQUIRE(out.contains("oracle_labels"));
    CHECK(out["oracle_transcript"] == "a");
    CHECK(out["pruned_matches_oracle"] == true);
    CHECK(validate_schema(out, schema).empty());
  }
}

TEST_CASE("bench and sweep run end to end on a generated workload") {
  TempDir dir;
  REQUIRE(run_command(quiet(kCli + " gen --seed 11 --feature-dim 3 --vocab-size 5" +
                            " --out-model " + dir.file("m.json") + " --out-workload " +
                            dir.file("w.json") +
                            " --n-utterances 4 --min-frames 30 --max-frames 60"))
              .exit_code == 0);

  SUBCASE("bench writes a schema-valid report") {
    const auto r = run_command(quiet(kCli + " bench --model " + dir.file("m.json") +
                                     " --workload " + dir.file("w.json") +
                                     " --concurrency 2 --dt-ms 200 --rc-ms 50 --beam 3"
                                     " --expand-beam 2.3 --state-beam 4.6 --out " +
                                     dir.file("report.json")));
    REQUIRE(r.exit_code == 0);
    const json report = read_json(dir.file("report.json"));
    const auto errors =
        validate_schema(report, read_json(rnnt::test::schemas_dir() + "/bench_report.schema.json"));
    for (const auto& e : errors) FAIL_CHECK(e);
    CHECK(report["n_utterances"] == 4);
    CHECK(report["concurrency"] == 2);
    CHECK(report["joiner_calls"].get<int64_t>() > 0);
  }

  SUBCASE("sweep prints the contracted CSV header and full grid") {
    const auto r = run_command(quiet(kCli + " sweep --model " + dir.file("m.json") +
                                     " --workload " + dir.file("w.json") +
                                     " --expand-beams 2.3,inf --state-beams 4.6"
                                     " --dt-ms-list 200,400 --rc-ms 50 --beam 3"));
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    REQUIRE(std::getline(lines, header));
    CHECK(header ==
          "expand_beam,state_beam,dt_ms,throughput,rtf_at_n,joiner_calls,encoder_frames,"
          "max_latency_ms");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 4);
  }
}
