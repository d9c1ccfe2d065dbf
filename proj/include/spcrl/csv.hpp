#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spcrl {

struct IterationRecord {
  int iteration = 0;
  double train_return_mean = 0.0;
  double eval_return_mean = 0.0;
  double eval_return_stderr = 0.0;
  double kl_to_target = 0.0;
  double alpha = 0.0;
  Eigen::VectorXd ctx_mean;
  Eigen::VectorXd ctx_std;
  double seconds = 0.0;
};

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline std::string csv_header(int ctx_dim) {
  std::string h = "iteration,train_return_mean,eval_return_mean,"
                  "eval_return_stderr,kl_to_target,alpha";
  for (int i = 0; i < ctx_dim; ++i) h += ",ctx_mean_" + std::to_string(i);
  for (int i = 0; i < ctx_dim; ++i) h += ",ctx_std_" + std::to_string(i);
  h += ",seconds";
  return h;
}

inline std::string csv_row(const IterationRecord& r) {
  std::string line = std::to_string(r.iteration);
  line += "," + format_double(r.train_return_mean);
  line += "," + format_double(r.eval_return_mean);
  line += "," + format_double(r.eval_return_stderr);
  line += "," + format_double(r.kl_to_target);
  line += "," + format_double(r.alpha);
  for (Eigen::Index i = 0; i < r.ctx_mean.size(); ++i)
    line += "," + format_double(r.ctx_mean[i]);
  for (Eigen::Index i = 0; i < r.ctx_std.size(); ++i)
    line += "," + format_double(r.ctx_std[i]);
  char sec[32];
  std::snprintf(sec, sizeof(sec), "%.3f", r.seconds);
  line += ",";
  line += sec;
  return line;
}

// One training run as parsed back from disk. The leading comment line pins
// the run identity (env, curriculum, seed); the fixed column schema carries
// everything else.
struct RunLog {
  std::string env;
  std::string curriculum;
  std::uint64_t seed = 0;
  int ctx_dim = 0;
  std::vector<IterationRecord> records;
};

inline void write_run_csv(const std::string& path, const std::string& env,
                          const std::string& curriculum, std::uint64_t seed,
                          int ctx_dim,
                          const std::vector<IterationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# env=" << env << " curriculum=" << curriculum << " seed=" << seed
      << "\n";
  out << csv_header(ctx_dim) << "\n";
  for (const auto& r : records) out << csv_row(r) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline RunLog read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  RunLog log;
  std::string line;

  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error(path + ": missing metadata line");
  std::istringstream meta(line.substr(2));
  std::string tok;
  while (meta >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "env") log.env = val;
    else if (key == "curriculum") log.curriculum = val;
    else if (key == "seed") log.seed = std::stoull(val);
  }

  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  int n_cols = 1;
  for (char ch : line) n_cols += (ch == ',');
  log.ctx_dim = (n_cols - 7) / 2;
  if (log.ctx_dim < 1 || csv_header(log.ctx_dim) != line)
    throw std::runtime_error(path + ": unexpected header: " + line);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != n_cols)
      throw std::runtime_error(path + ": ragged row: " + line);
    IterationRecord r;
    r.iteration = static_cast<int>(vals[0]);
    r.train_return_mean = vals[1];
    r.eval_return_mean = vals[2];
    r.eval_return_stderr = vals[3];
    r.kl_to_target = vals[4];
    r.alpha = vals[5];
    r.ctx_mean.resize(log.ctx_dim);
    r.ctx_std.resize(log.ctx_dim);
    for (int i = 0; i < log.ctx_dim; ++i) {
      r.ctx_mean[i] = vals[6 + i];
      r.ctx_std[i] = vals[6 + log.ctx_dim + i];
    }
    r.seconds = vals.back();
    log.records.push_back(std::move(r));
  }
  return log;
}

}  // namespace spcrl
