/*
 * Copyright 2026 The apcr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Runs the apcr executable end to end on tiny inputs.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() /
           ("apcr_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int status;
  std::string output;
};

Run apcr(const std::string& args) {
  const std::string cmd = std::string(APCR_CLI) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  Run r{-1, ""};
  if (!pipe) return r;
  char buf[4096];
  while (size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_wall_seconds(const std::string& csv) {
  std::stringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

const char* kSmall = " --min-length 25 --max-length 40 --dim 6 --classes 4";
const char* kTinyModel =
    " --hidden 8 --layers 2 --batch-size 8 --p-anchor 0.3 --val-fraction 0.3";
const char* kWindow = " --s 3 --l 2";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir(
        ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string at(const std::string& name) const {
    return (dir_ / name).string();
  }

  void synth(const std::string& name, int count, int seed) {
    auto r = apcr("synth --out " + at(name) + " --count " +
                  std::to_string(count) + " --seed " + std::to_string(seed) +
                  kSmall);
    ASSERT_EQ(r.status, 0) << r.output;
  }

  fs::path dir_;
};

TEST_F(Cli, SynthIsDeterministic) {
  synth("a", 6, 3);
  synth("b", 6, 3);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_ / "a"))
    files.push_back(e.path().filename().string());
  EXPECT_EQ(files.size(), 7u);  // 6 utterances + config.json
  for (const auto& f : files)
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  synth("c", 6, 4);
  EXPECT_NE(slurp(dir_ / "a" / "utt00000.pcrp"),
            slurp(dir_ / "c" / "utt00000.pcrp"));
}

TEST_F(Cli, ConfigFileSitsBetweenDefaultsAndFlags) {
  synth("tr", 12, 1);
  std::ofstream(dir_ / "cfg.json")
      << R"({"epochs": 2, "hidden": 8, "lambda": 0.25, "objective": "lf",
            "val-fraction": 0.3})";
  auto r = apcr("pretrain --train " + at("tr") + " --out " + at("run") +
                " --config " + at("cfg.json") + " --epochs 1 --layers 1");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir_ / "run" / "config.json"));
  EXPECT_EQ(j["command"], "pretrain");
  const auto& s = j["settings"];
  EXPECT_EQ(s["epochs"], 1);  // flag beats config
  EXPECT_EQ(s["hidden"], 8);  // config beats default
  EXPECT_EQ(s["lambda"], 0.25);
  EXPECT_EQ(s["objective"], "lf");
  EXPECT_EQ(s["layers"], 1);
  EXPECT_EQ(s["batch-size"], 32);  // default
  EXPECT_EQ(s["dim"], 6);          // resolved from the corpus

  // The written file replays the same settings.
  r = apcr("pretrain --train " + at("tr") + " --out " + at("run2") +
           " --config " + at("run/config.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(strip_wall_seconds(slurp(dir_ / "run" / "metrics.csv")),
            strip_wall_seconds(slurp(dir_ / "run2" / "metrics.csv")));

  // ...but not for another command.
  r = apcr("sweep --train " + at("tr") + " --out " + at("sw") + " --config " +
           at("run/config.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("pretrain"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "sw"));
}

TEST_F(Cli, InvalidInputsLeaveNoOutput) {
  synth("tr", 6, 1);
  std::ofstream(dir_ / "typo.json") << R"({"epoch": 3})";
  const std::string base =
      "pretrain --train " + at("tr") + " --out " + at("out");
  auto r = apcr(base + " --config " + at("typo.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("unknown setting 'epoch'"), std::string::npos)
      << r.output;
  r = apcr(base + " --dim 7");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("dimension mismatch"), std::string::npos)
      << r.output;
  EXPECT_NE(apcr(base + " --objective lx").status, 0);
  EXPECT_NE(apcr(base + " --lr -1").status, 0);
  EXPECT_NE(apcr(base + " --n 0").status, 0);
  EXPECT_NE(apcr("pretrain --train " + at("missing") + " --out " + at("out"))
                .status,
            0);
  EXPECT_NE(apcr("sweep --train " + at("tr") + " --out " + at("out") +
                 " --n 1 --s 0")
                .status,
            0);
  r = apcr("extract --model " + at("tr/config.json") + " --in " + at("tr") +
           " --out " + at("out"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("bad magic"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, PretrainRefusesToClobberARun) {
  synth("tr", 10, 1);
  const std::string cmd = "pretrain --train " + at("tr") + " --out " +
                          at("run") + " --epochs 1" + kTinyModel + kWindow;
  ASSERT_EQ(apcr(cmd).status, 0);
  const auto before = slurp(dir_ / "run" / "last.ckpt");
  auto r = apcr(cmd);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("--resume"), std::string::npos) << r.output;
  EXPECT_EQ(slurp(dir_ / "run" / "last.ckpt"), before);
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  synth("tr", 10, 1);
  const std::string common =
      "pretrain --train " + at("tr") + kTinyModel + kWindow;
  ASSERT_EQ(apcr(common + " --out " + at("full") + " --epochs 3").status, 0);
  ASSERT_EQ(apcr(common + " --out " + at("part") + " --epochs 1").status, 0);
  auto r = apcr(common + " --out " + at("part") + " --epochs 3 --resume");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "full" / "last.ckpt"),
            slurp(dir_ / "part" / "last.ckpt"));
  EXPECT_EQ(strip_wall_seconds(slurp(dir_ / "full" / "metrics.csv")),
            strip_wall_seconds(slurp(dir_ / "part" / "metrics.csv")));
}

TEST_F(Cli, ExtractAndProbeLeaveTheCheckpointUntouched) {
  synth("tr", 16, 1);
  synth("te", 6, 2);
  ASSERT_EQ(apcr("pretrain --train " + at("tr") + " --out " + at("run") +
                 " --epochs 1" + kTinyModel + kWindow)
                .status,
            0);
  const auto ckpt = slurp(dir_ / "run" / "last.ckpt");
  auto r = apcr("extract --model " + at("run/last.ckpt") + " --in " +
                at("te") + " --out " + at("h") + " --threads 2");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "h" / "utt00005.pcrp"));

  const std::string probe = "probe --train " + at("tr") + " --test " +
                            at("te") + " --model apc=" + at("run/last.ckpt") +
                            " --shifts=-2,0,2 --epochs 10 --out ";
  r = apcr(probe + at("probe"));
  ASSERT_EQ(r.status, 0) << r.output;
  const auto report = slurp(dir_ / "probe" / "probe_report.csv");
  EXPECT_EQ(report.rfind("features,-2,0,+2\nraw,", 0), 0u) << report;
  EXPECT_NE(report.find("\napc,"), std::string::npos) << report;
  EXPECT_EQ(slurp(dir_ / "run" / "last.ckpt"), ckpt);

  // Same inputs, same report.
  r = apcr(probe + at("probe2"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "probe2" / "probe_report.csv"), report);

  std::ofstream(dir_ / "map.txt") << "0 0\n1 0\n2 1\n3 1\n";
  r = apcr("probe --train " + at("tr") + " --test " + at("te") +
           " --shifts 0 --epochs 10 --collapse " + at("map.txt") + " --out " +
           at("probe3"));
  ASSERT_EQ(r.status, 0) << r.output;
  std::ofstream(dir_ / "bad.txt") << "0 0\n1 0\n";
  r = apcr("probe --train " + at("tr") + " --test " + at("te") +
           " --shifts 0 --collapse " + at("bad.txt") + " --out " +
           at("probe4"));
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(fs::exists(dir_ / "probe4"));
}

TEST_F(Cli, SweepResumesAndReportIsStable) {
  synth("tr", 20, 1);
  const std::string cmd = "sweep --train " + at("tr") + " --out " + at("sw") +
                          " --n 1,2 --s 3 --l 2,3 --epochs 1" + kTinyModel;
  auto r = apcr(cmd);
  ASSERT_EQ(r.status, 0) << r.output;
  const auto summary = slurp(dir_ / "sw" / "summary.csv");
  // Header plus 2 horizons x (baseline + 2 windows).
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 7);
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "n2_s3_l3" / "last.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "n1_baseline" / "last.ckpt"));

  r = apcr(cmd);
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(r.output.find("train "), std::string::npos) << r.output;
  EXPECT_EQ(slurp(dir_ / "sw" / "summary.csv"), summary);

  fs::remove(dir_ / "sw" / "n2_s3_l2" / "last.ckpt");
  r = apcr(cmd);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("n2_s3_l2"), std::string::npos) << r.output;
  r = apcr(cmd + " --overwrite");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "sw" / "summary.csv"), summary);

  r = apcr("report --summary " + at("sw/summary.csv") + " --out " + at("rep"));
  ASSERT_EQ(r.status, 0) << r.output;
  const auto data = slurp(dir_ / "rep" / "fig2_data.csv");
  EXPECT_EQ(std::count(data.begin(), data.end(), '\n'), 7);
  EXPECT_NE(slurp(dir_ / "rep" / "fig2.svg").find("<svg"), std::string::npos);
  r = apcr("report --summary " + at("sw/summary.csv") + " --out " + at("rep"));
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(slurp(dir_ / "rep" / "fig2_data.csv"), data);
}

TEST_F(Cli, ReportWarnsAboutMissingCells) {
  std::ofstream(dir_ / "summary.csv") << "n,s,l,objective,val_Lf,val_Lr\n"
                                      << "1,-,-,lf,0.5,0\n1,7,3,lm,0.4,0.6\n"
                                      << "5,7,3,lm,0.45,0.7\n";
  auto r = apcr("report --summary " + at("summary.csv") + " --out " + at("rep"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("warning: missing cells: n=5 (-,-)"),
            std::string::npos)
      << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "fig2.svg"));

  std::ofstream(dir_ / "broken.csv") << "n,s,l\n1,2\n";
  r = apcr("report --summary " + at("broken.csv") + " --out " + at("rep2"));
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(fs::exists(dir_ / "rep2"));
}

void put_u32(std::ofstream& o, std::uint32_t v) {
  o.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u16(std::ofstream& o, std::uint16_t v) {
  o.write(reinterpret_cast<const char*>(&v), 2);
}

// Minimal PCM16 mono RIFF file, little-endian host assumed.
void write_tone(const fs::path& p, std::size_t samples, double hz) {
  std::ofstream o(p, std::ios::binary);
  o.write("RIFF", 4);
  put_u32(o, static_cast<std::uint32_t>(36 + 2 * samples));
  o.write("WAVEfmt ", 8);
  put_u32(o, 16);
  put_u16(o, 1);
  put_u16(o, 1);
  put_u32(o, 16000);
  put_u32(o, 32000);
  put_u16(o, 2);
  put_u16(o, 16);
  o.write("data", 4);
  put_u32(o, static_cast<std::uint32_t>(2 * samples));
  for (std::size_t i = 0; i < samples; ++i)
    put_u16(o, static_cast<std::uint16_t>(static_cast<std::int16_t>(
                   8000 * std::sin(2 * 3.14159265358979 * hz * i / 16000))));
}

TEST_F(Cli, FeaturizeWritesOneFilePerWav) {
  fs::create_directories(dir_ / "wav");
  write_tone(dir_ / "wav" / "a.wav", 16000, 440);
  write_tone(dir_ / "wav" / "b.WAV", 8000, 1000);
  std::ofstream(dir_ / "wav" / "notes.txt") << "ignored";
  auto r = apcr("featurize --in " + at("wav") + " --out " + at("feat") +
                " --threads 2");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "feat" / "b.pcrp"));
  // 1 + (16000 - 400) / 160 = 98 frames of 80 floats after an 18-byte header.
  EXPECT_EQ(fs::file_size(dir_ / "feat" / "a.pcrp"), 18u + 98u * 80u * 4u);

  r = apcr("featurize --in " + at("wav") + " --out " + at("feat2") +
           " --mel-bins 0");
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(fs::exists(dir_ / "feat2"));
}

}  // namespace
