#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "hcirl/config.hpp"

using namespace hcirl;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "hcirl_config_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  write_file(p, text);
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const RunManifest m = parse_config(write_temp("empty.ini", ""));
  const RunManifest d;
  EXPECT_EQ(snapshot(m), snapshot(d));
  EXPECT_EQ(m.train.gamma, 0.99);
  EXPECT_EQ(m.env.num_intents, 6);
  EXPECT_EQ(m.output_dir(), fs::path("runs") / "default");
  EXPECT_EQ(m.resolved_grid(), default_grid(SweepParameter::gamma));
  EXPECT_EQ(snapshot(parse_config("")), snapshot(d));
}

TEST(Config, FlagOverridesFile) {
  const fs::path p = write_temp("gamma.ini", "[train]\ngamma = 0.9\nbatch_size = 8\n");
  EXPECT_EQ(parse_config(p).train.gamma, 0.9);
  const RunManifest m = parse_config(p, {{"gamma", "0.5"}});
  EXPECT_EQ(m.train.gamma, 0.5);
  EXPECT_EQ(m.train.batch_size, 8u);
}

TEST(Config, AllSectionsParse) {
  const fs::path p = write_temp("full.ini",
                                "# comment\n"
                                "[env]\nnoise_prob = 0.3\nimbalance_skew = 1.5\n"
                                "; another comment\n"
                                "[train]\neps_decay = 0.95\nadvantage_mode = raw_q\n"
                                "[run]\nexperiment = exp1\nagent = qlearn\nparam = lambda\n"
                                "grid = 0.9, 0.99\nagents = random, ours\nseeds = 3\n");
  const RunManifest m = parse_config(p);
  EXPECT_EQ(m.env.noise_prob, 0.3);
  EXPECT_EQ(m.env.imbalance_skew, 1.5);
  EXPECT_EQ(m.train.schedule.decay, 0.95);
  EXPECT_EQ(m.train.advantage_mode, AdvantageMode::raw_q);
  EXPECT_EQ(m.experiment, "exp1");
  EXPECT_EQ(m.agent, AgentKind::qlearn);
  EXPECT_EQ(m.param, SweepParameter::lambda);
  EXPECT_EQ(m.resolved_grid(), (std::vector<double>{0.9, 0.99}));
  EXPECT_EQ(m.agents, (std::vector<AgentKind>{AgentKind::random, AgentKind::ours}));
  EXPECT_EQ(m.seeds, 3u);
}

TEST(Config, UnknownKeySuggestsNearest) {
  const std::string msg = error_of([] { parse_config("", {{"gamm", "0.9"}}); });
  EXPECT_NE(msg.find("unknown key 'gamm'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("did you mean 'gamma'"), std::string::npos) << msg;
  const fs::path p = write_temp("typo.ini", "[train]\nbatch_sise = 4\n");
  const std::string file_msg = error_of([&] { parse_config(p); });
  EXPECT_NE(file_msg.find(":2: "), std::string::npos) << file_msg;
  EXPECT_NE(file_msg.find("batch_size"), std::string::npos) << file_msg;
}

TEST(Config, TypeMismatchNamesKeyAndExpectedType) {
  const std::string msg = error_of([] { parse_config("", {{"gamma", "abc"}}); });
  EXPECT_NE(msg.find("gamma"), std::string::npos) << msg;
  EXPECT_NE(msg.find("real number"), std::string::npos) << msg;
  EXPECT_THROW(parse_config("", {{"batch_size", "-4"}}), ValidationError);
  EXPECT_THROW(parse_config("", {{"batch_size", "2.5"}}), ValidationError);
  EXPECT_THROW(parse_config("", {{"agent", "dqn"}}), ValidationError);
  EXPECT_THROW(parse_config("", {{"gamma", "1.5"}}), ValidationError);
}

TEST(Config, MissingFileIsIoError) {
  const fs::path p = fs::temp_directory_path() / "hcirl_config_tests" / "nope.ini";
  fs::remove(p);
  try {
    parse_config(p);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
}

TEST(Config, StructuralErrors) {
  EXPECT_THROW(parse_config(write_temp("dup.ini", "[train]\ngamma = 0.9\ngamma = 0.8\n")),
               ValidationError);
  EXPECT_THROW(parse_config(write_temp("sect.ini", "[model]\nx = 1\n")), ValidationError);
  EXPECT_THROW(parse_config(write_temp("wrong.ini", "[env]\ngamma = 0.9\n")), ValidationError);
  EXPECT_THROW(parse_config(write_temp("outside.ini", "gamma = 0.9\n")), ValidationError);
  EXPECT_THROW(parse_config(write_temp("noeq.ini", "[train]\ngamma\n")), ValidationError);
  EXPECT_THROW(parse_config(write_temp("hdr.ini", "[train\n")), ValidationError);
  EXPECT_THROW(parse_config("", {{"experiment", "a/b"}}), ValidationError);
}

TEST(Config, SnapshotRoundTrips) {
  const RunManifest m = parse_config("", {{"gamma", "0.3"},
                                          {"noise_prob", "0.25"},
                                          {"ridge", "1e-9"},
                                          {"grid", "0.1,0.2"},
                                          {"agents", "ours,raw_q"},
                                          {"out", "elsewhere"}});
  const std::string text = snapshot(m);
  const RunManifest back = parse_config(write_temp("snap.ini", text));
  EXPECT_EQ(snapshot(back), text);
  EXPECT_EQ(back.train.ridge, 1e-9);
  EXPECT_EQ(back.grid, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(text.rfind("# hcirl 0.1.0", 0), 0u);
  const std::string defaults = snapshot(RunManifest{});
  EXPECT_EQ(snapshot(parse_config(write_temp("snap_default.ini", defaults))), defaults);
}

TEST(Config, EditDistance) {
  EXPECT_EQ(edit_distance("", ""), 0u);
  EXPECT_EQ(edit_distance("gamm", "gamma"), 1u);
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(nearest_key("learnign_rate"), "learning_rate");
}

TEST(Config, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(HCIRL_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(parse_config(e.path())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 1u);
  EXPECT_EQ(read_file(fs::path(HCIRL_SOURCE_DIR) / "configs" / "default.ini"), snapshot(RunManifest{}));
}
