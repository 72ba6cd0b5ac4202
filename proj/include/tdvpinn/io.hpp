#pragma once

// Text checkpoints and CSV writers. Numbers are written with 17 significant
// digits so that a write/read round trip is exact.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/training.hpp"

namespace tdvpinn {

inline constexpr const char* kCheckpointMagic = "# tdvpinn-checkpoint v1";

/// Layout: magic line (with optional suffix), "widths,1,...,N", then one parameter per line.
inline void write_checkpoint(const MLPState& state, const std::string& path, const std::string& suffix = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write checkpoint '" + path + "'");
  out.precision(17);
  out << kCheckpointMagic << (suffix.empty() ? "" : " ") << suffix << '\n';
  out << "widths";
  for (int w : state.widths) out << ',' << w;
  out << '\n';
  const Eigen::VectorXd theta = flatten(state);
  for (Eigen::Index i = 0; i < theta.size(); ++i) out << theta[i] << '\n';
}

inline MLPState read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind(kCheckpointMagic, 0) != 0) {
    throw IngestionError("'" + path + "' is not a v1 checkpoint");
  }
  if (!std::getline(in, line)) throw IngestionError("'" + path + "': missing widths line");
  auto cells = detail::split_csv(line);
  if (cells.empty() || cells[0] != "widths") throw IngestionError("'" + path + "': missing widths line");
  std::vector<int> widths;
  for (std::size_t i = 1; i < cells.size(); ++i) widths.push_back(std::stoi(cells[i]));
  MLPState state;
  try {
    state = init_mlp(0, widths);
  } catch (const ConfigError& e) {
    throw IngestionError("'" + path + "': " + e.what());
  }
  Eigen::VectorXd theta(static_cast<Eigen::Index>(state.n_params()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!std::getline(in, line)) throw IngestionError("'" + path + "': truncated parameter list");
    try {
      theta[i] = std::stod(line);
    } catch (const std::exception&) {
      throw IngestionError("'" + path + "': bad parameter '" + line + "'");
    }
  }
  unflatten(theta, state);
  return state;
}

/// iteration,lr,loss. Wall time goes to a separate file so histories stay reproducible.
inline void write_history(const std::vector<HistoryRow>& rows, const std::string& path, const std::string& header = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header.empty()) out << header << '\n';
  out << "iteration,lr,loss\n";
  for (const auto& r : rows) out << r.iteration << ',' << r.lr << ',' << r.loss << '\n';
}

inline void write_timing(const std::vector<double>& seconds, const std::string& path, const std::string& header = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(9);
  if (!header.empty()) out << header << '\n';
  out << "iteration,wall_seconds\n";
  double total = 0.0;
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    total += seconds[i];
    out << i << ',' << total << '\n';
  }
}

/// Generic numeric table: header row then rows.
inline void write_table(const std::string& path, const std::string& header, const std::vector<std::string>& columns,
                        const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header.empty()) out << header << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace tdvpinn
