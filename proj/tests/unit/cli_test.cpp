#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gbmcert/gbmcert.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("gbmcert_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args, std::string* err = nullptr) {
  const fs::path err_file = scratch() / "stderr.txt";
  const std::string cmd = std::string(GBMCERT_CLI) + " " + args + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(err_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small corpus and synonym cache shared by the tests below.
const fs::path& corpus() {
  static const fs::path dir = [] {
    const fs::path d = scratch() / "corpus";
    EXPECT_EQ(run("synth --out " + d.string() + " --n-train 60 --n-val 20 --n-test 20"), 0);
    EXPECT_EQ(run("synonyms --embeddings " + (d / "embeddings.txt").string() + " --out " +
                  (d / "synonyms.json").string()),
              0);
    return d;
  }();
  return dir;
}

std::string train_args(const std::string& model, const std::string& out) {
  const fs::path& c = corpus();
  return "train --model " + model + " --embeddings " + (c / "embeddings.txt").string() +
         " --train " + (c / "train.tsv").string() + " --val " + (c / "val.tsv").string() +
         " --epochs 2 --hidden 4 --filters 4 --out " + out;
}

}  // namespace

TEST(Cli, TrainWritesCheckpointAndHistory) {
  const fs::path out = scratch() / "train_lstm";
  ASSERT_EQ(run(train_args("lstm", out.string()) + " --beta 0"), 0);
  EXPECT_TRUE(fs::exists(out / "model.ckpt"));
  const std::string hist = slurp(out / "history.csv");
  EXPECT_GE(std::count(hist.begin(), hist.end(), '\n'), 2);
  const auto meta = nlohmann::json::parse(slurp(out / "history.json"));
  EXPECT_EQ(meta["label"], "baseline");
}

TEST(Cli, GbmExportsMatrixHistogramAndSummary) {
  const fs::path out = scratch() / "train_cnn";
  ASSERT_EQ(run(train_args("cnn", out.string())), 0);
  const fs::path g = scratch() / "gbm_cnn";
  ASSERT_EQ(run("gbm --checkpoint " + (out / "model.ckpt").string() + " --out " + g.string()), 0);
  const auto summary = nlohmann::json::parse(slurp(g / "summary.json"));
  std::ifstream hist(g / "histogram.csv");
  std::string line;
  std::getline(hist, line);
  EXPECT_EQ(line, "bin_lo,bin_hi,count");
  std::size_t total = 0;
  while (std::getline(hist, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  EXPECT_EQ(total, summary["rows"].get<std::size_t>() * summary["cols"].get<std::size_t>());
  const std::string csv = slurp(g / "gbm.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "row,col,value,block");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(total) + 1);
  EXPECT_GT(summary["lipschitz"].get<double>(), 0.0);
}

TEST(Cli, ZeroCnnCheckpointHasZeroSum) {
  gbmcert::ModelShape s;
  s.kind = gbmcert::ModelKind::Cnn;
  const fs::path ck = scratch() / "zero.ckpt";
  gbmcert::save_checkpoint(ck.string(), gbmcert::Model<double>::zeros(s));
  const fs::path g = scratch() / "gbm_zero";
  ASSERT_EQ(run("gbm --checkpoint " + ck.string() + " --out " + g.string()), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(g / "summary.json"))["sum"].get<double>(), 0.0);
  std::string err;
  EXPECT_EQ(run("gbm --model lstm --checkpoint " + ck.string() + " --out " + g.string(), &err), 2);
  EXPECT_NE(err.find("architecture mismatch"), std::string::npos);
}

TEST(Cli, CertifyReportsModeAndFraction) {
  const fs::path out = scratch() / "train_s4";
  ASSERT_EQ(run(train_args("s4", out.string())), 0);
  const fs::path& c = corpus();
  for (const char* mode : {"chained", "final-cell"}) {
    const fs::path r = scratch() / (std::string("cert_") + mode);
    ASSERT_EQ(run("certify --checkpoint " + (out / "model.ckpt").string() + " --embeddings " +
                  (c / "embeddings.txt").string() + " --synonyms " +
                  (c / "synonyms.json").string() + " --data " + (c / "test.tsv").string() +
                  " --mode " + mode + " --threads 2 --out " + r.string()),
              0);
    const auto rep = nlohmann::json::parse(slurp(r / "report.json"));
    EXPECT_EQ(rep["mode"], mode);
    EXPECT_EQ(rep["sentences"], 20);
    EXPECT_LE(rep["certified_accuracy"].get<double>(), rep["clean_accuracy"].get<double>());
    const std::string lines = slurp(r / "certificates.jsonl");
    EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 20);
  }
}

TEST(Cli, ThreadCountDoesNotChangeCertificates) {
  const fs::path out = scratch() / "train_bilstm";
  ASSERT_EQ(run(train_args("bilstm", out.string())), 0);
  const fs::path& c = corpus();
  std::string outputs[2];
  for (int t = 0; t < 2; ++t) {
    const fs::path r = scratch() / ("cert_threads" + std::to_string(t));
    ASSERT_EQ(run("certify --checkpoint " + (out / "model.ckpt").string() + " --embeddings " +
                  (c / "embeddings.txt").string() + " --synonyms " +
                  (c / "synonyms.json").string() + " --data " + (c / "test.tsv").string() +
                  " --threads " + std::to_string(1 + 2 * t) + " --out " + r.string()),
              0);
    outputs[t] = slurp(r / "certificates.jsonl");
  }
  EXPECT_EQ(outputs[0], outputs[1]);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const fs::path cfg = scratch() / "run.toml";
  {
    std::ofstream f(cfg);
    f << "[train]\nmodel = \"cnn\"\nbeta = 0.25\nepochs = 1\n";
  }
  const fs::path out = scratch() / "train_cfg";
  ASSERT_EQ(run("--config " + cfg.string() + " " + train_args("lstm", out.string())), 0);
  const auto meta = nlohmann::json::parse(slurp(out / "history.json"));
  EXPECT_EQ(meta["model"], "lstm");
  EXPECT_EQ(meta["beta"], 0.25);
}

TEST(Cli, ExitCodes) {
  std::string err;
  EXPECT_EQ(run("", &err), 1);
  EXPECT_EQ(run("train --model gru --embeddings x --train y --out z", &err), 1);
  EXPECT_NO_THROW(nlohmann::json::parse(err));
  EXPECT_EQ(run("synonyms --embeddings /nonexistent/e.txt --out " + (scratch() / "s.json").string(),
                &err),
            2);
  const auto j = nlohmann::json::parse(err);
  EXPECT_EQ(j["exit_code"], 2);
  EXPECT_EQ(run("gbm --checkpoint " + (corpus() / "train.tsv").string() + " --out " +
                    (scratch() / "bad").string(),
                &err),
            2);
}

TEST(Cli, DivergentTrainingExitsWithNumericCode) {
  const fs::path out = scratch() / "train_diverge";
  std::string err;
  const int code = run(train_args("cnn", out.string()) + " --lr 1e9 --head-gain 1e6", &err);
  EXPECT_EQ(code, 3) << err;
}
