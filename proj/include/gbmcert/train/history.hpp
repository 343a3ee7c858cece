#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gbmcert/core/error.hpp"
#include "gbmcert/train/trainer.hpp"

namespace gbmcert {

// Shortest round-trip formatting keeps reruns byte-identical.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,loss,ce,l_gbm,clean_acc,sum_M\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.ce) << ','
        << format_double(r.l_gbm) << ',' << format_double(r.clean_acc) << ','
        << format_double(r.sum_m) << '\n';
  }
}

inline void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Data, "cannot write history '" + path + "'");
  write_history_csv(out, history);
}

// Runs with beta = 0 are the unregularised baseline.
inline nlohmann::json history_metadata(const std::string& model, double beta, std::uint64_t seed,
                                       std::size_t best_epoch) {
  return {{"label", beta == 0.0 ? "baseline" : "gbm"},
          {"model", model},
          {"beta", beta},
          {"seed", seed},
          {"best_epoch", best_epoch}};
}

}  // namespace gbmcert
