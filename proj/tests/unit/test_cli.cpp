#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "hieraf/image.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(HIERAF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, RenderWritesFrame) {
  const fs::path out = fresh_dir("hieraf_cli_render");
  EXPECT_EQ(run("render --focus 47 --exposure-index 100 --out " + out.string()), 0);
  const auto files = std::distance(fs::directory_iterator(out), fs::directory_iterator{});
  ASSERT_EQ(files, 1);
  const auto frame = hieraf::read_pgm(fs::directory_iterator(out)->path());
  EXPECT_GT(frame.size(), 0u);
  fs::remove_all(out);
}

TEST(Cli, UnknownConfigKeyExitsTwoWithoutOutputs) {
  const fs::path dir = fresh_dir("hieraf_cli_badcfg");
  fs::create_directories(dir);
  const fs::path cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"env": {"horizon": 3}})";
  const fs::path out = dir / "out";
  EXPECT_EQ(run("train --config " + cfg.string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(run("render --exposure-index 300 --out " + out.string()), 1);
  EXPECT_EQ(run("frobnicate"), 2);
  fs::remove_all(dir);
}

TEST(Cli, HelpListsSubcommands) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("config-keys"), 0);
}

}  // namespace
