// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtraj/runner.hpp"

#include "qtraj/ensemble.hpp"
#include "qtraj/oracle.hpp"
#include "qtraj/regularity.hpp"
#include "qtraj/stationary.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace qtraj {
namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string matrix_dump(const Matrix& m) {
  std::string s = "# dim=" + std::to_string(m.rows()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += std::to_string(i) + "," + std::to_string(j) + "," + format_double(m(i, j).real()) + "," +
           format_double(m(i, j).imag()) + "\n";
  return s;
}

bool RunManifest::faulted() const {
  for (const auto& t : tasks)
    if (!t.error.empty() || t.fault_count > 0) return true;
  return false;
}

namespace {

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }
  Csv& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) text_ += (k ? "," : "") + cells[k];
    text_ += "\n";
    return *this;
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

std::string num(double x) { return format_double(x); }

class Session {
 public:
  Session(const RunConfig& cfg, fs::path dir, int threads)
      : cfg_(cfg),
        dir_(std::move(dir)),
        threads_(threads),
        model_(std::make_shared<ModelSpec>(build_model(cfg.model))),
        initial_(build_initial_state(model_->space, cfg.run.initial)) {
    for (const auto& name : cfg.run.observables) observables_.push_back(build_observable(model_->space, name));
  }

  RunManifest run() {
    RunManifest man;
    man.config_hash = cfg_.hash();
    man.output_dir = dir_.string();
    const std::map<Task, std::function<std::size_t()>> dispatch = {
        {Task::master_oracle, [&] { return master_oracle(); }},
        {Task::heisenberg_oracle, [&] { return heisenberg_oracle(); }},
        {Task::duality, [&] { return duality(); }},
        {Task::ehrenfest, [&] { return ehrenfest(); }},
        {Task::picard, [&] { return picard(); }},
        {Task::ensemble, [&] { return ensemble(); }},
        {Task::regularity, [&] { return regularity(); }},
        {Task::equivalence, [&] { return equivalence(); }},
        {Task::dissipativity, [&] { return dissipativity(); }},
        {Task::stationary, [&] { return stationary(); }},
    };
    for (Task t : cfg_.tasks) {
      TaskRecord rec;
      rec.task = to_string(t);
      const auto start = std::chrono::steady_clock::now();
      try {
        rec.fault_count = dispatch.at(t)();
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      man.tasks.push_back(rec);
    }
    man.files = files_;
    man.files.push_back("manifest.json");
    write_manifest(man);
    return man;
  }

 private:
  void write(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
  }

  std::vector<double> run_times() const {
    const TimeGrid g(cfg_.run.t_end, cfg_.run.dt, cfg_.run.save_every);
    return g.save_times();
  }

  DensityMatrix rho0() const { return DensityMatrix::pure(initial_.vec); }

  std::size_t master_oracle() {
    const auto times = run_times();
    const auto fam = solve_master(*model_, rho0(), times);
    Csv csv({"time", "observable_label", "value_re", "value_im"});
    for (std::size_t s = 0; s < times.size(); ++s)
      for (const auto& o : observables_) {
        const Complex v = (o.matrix * fam.values[s]).trace();
        csv.row({num(times[s]), o.label, num(v.real()), num(v.imag())});
      }
    write("master_oracle.observables.csv", csv.text());
    write("master_oracle.rho_final.mat.txt", matrix_dump(fam.values.back()));
    return 0;
  }

  std::size_t heisenberg_oracle() {
    const auto times = run_times();
    Csv csv({"time", "observable_label", "value_re", "value_im"});
    std::vector<PropagatedFamily> fams;
    for (const auto& o : observables_) fams.push_back(solve_heisenberg(*model_, o, times));
    for (std::size_t s = 0; s < times.size(); ++s)
      for (std::size_t k = 0; k < observables_.size(); ++k) {
        const Complex v = expectation(initial_.vec, fams[k].values[s]);
        csv.row({num(times[s]), observables_[k].label, num(v.real()), num(v.imag())});
      }
    write("heisenberg_oracle.observables.csv", csv.text());
    for (std::size_t k = 0; k < observables_.size(); ++k)
      write("heisenberg_oracle." + observables_[k].label + "_final.mat.txt", matrix_dump(fams[k].values.back()));
    return 0;
  }

  std::size_t duality() {
    const auto times = run_times();
    Csv csv({"observable_label", "max_abs_diff", "points"});
    for (const auto& o : observables_)
      csv.row({o.label, num(duality_check(*model_, o, rho0(), times)), std::to_string(times.size())});
    write("duality.summary.csv", csv.text());
    return 0;
  }

  std::size_t ehrenfest() {
    const auto& mp = *model_->monitored;
    const double h = cfg_.ehrenfest_dt;
    const auto times = uniform_times(cfg_.run.t_end, h);
    const auto fam = solve_master(*model_, rho0(), times);
    const auto f = build_fock_ops(model_->space);
    std::vector<double> q, p;
    for (const auto& r : fam.values) {
      q.push_back((f.q.matrix * r).trace().real());
      p.push_back((f.p.matrix * r).trace().real());
    }
    Csv csv({"t", "dQdt_fd", "P_over_m", "P_resid", "dPdt_fd", "minus2cQ", "Q_resid"});
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
      const double dq = (q[k + 1] - q[k - 1]) / (times[k + 1] - times[k - 1]);
      const double dp = (p[k + 1] - p[k - 1]) / (times[k + 1] - times[k - 1]);
      const double pm = p[k] / mp.m, mq = -2.0 * mp.c * q[k];
      csv.row({num(times[k]), num(dq), num(pm), num(std::abs(dq - pm)), num(dp), num(mq), num(std::abs(dp - mq))});
    }
    write("ehrenfest.relations.csv", csv.text());
    return 0;
  }

  std::size_t picard() {
    const Op& a = observables_.front();
    const auto res = minimal_semigroup_picard(*model_, a, cfg_.picard_t, cfg_.picard_iters, cfg_.picard_quad_points);
    const auto ref = solve_heisenberg(*model_, a, {0.0, cfg_.picard_t}).values.back();
    Csv csv({"n", "diff_to_heisenberg", "successive_difference"});
    for (std::size_t n = 0; n < res.iterates.size(); ++n)
      csv.row({std::to_string(n), num(operator_norm(res.iterates[n] - ref)),
               n == 0 ? std::string("nan") : num(res.successive_differences[n - 1])});
    write("picard.convergence.csv", csv.text());
    return 0;
  }

  std::size_t ensemble() {
    std::size_t faults = 0;
    const TimeGrid grid(cfg_.run.t_end, cfg_.run.dt, cfg_.run.save_every);
    for (SseKind kind : cfg_.run.kinds) {
      EnsembleOptions eo;
      eo.retain_states = false;
      eo.threads = threads_;
      eo.tracked = observables_;
      for (auto& op : regularity_tracked_ops(model_->reference)) eo.tracked.push_back(op);
      auto batch = std::make_shared<TrajectoryBatch>(
          run_ensemble(*model_, point_mass(initial_), grid, cfg_.run.M, cfg_.run.base_seed, kind, eo));
      faults += batch->fault_count;
      Csv csv({"time", "observable_label", "mean_re", "mean_im", "stderr", "M_eff"});
      for (double t : batch->times) {
        for (const auto& o : observables_) {
          const auto e = observable_mean(*batch, o, t);
          csv.row({num(t), o.label, num(e.value.real()), num(e.value.imag()), num(e.stderr),
                   std::to_string(e.M_effective)});
        }
        const auto e = norm_mean(*batch, t);
        csv.row({num(t), "norm2", num(e.value.real()), num(e.value.imag()), num(e.stderr), std::to_string(e.M_effective)});
      }
      const std::string k = to_string(kind);
      write("ensemble." + k + ".csv", csv.text());
      write("ensemble." + k + "_rho_final.mat.txt", matrix_dump(reconstruct_density(*batch, batch->times.back()).matrix));
      batches_[kind] = batch;
    }
    return faults;
  }

  std::size_t regularity() {
    for (const auto& [kind, batch] : batches_) {
      const auto tr = regularity_trace(*batch, model_->reference);
      Csv csv({"time", "c_moment", "stderr", "tail_mass", "truncation_unreliable"});
      for (std::size_t s = 0; s < tr.times.size(); ++s)
        csv.row({num(tr.times[s]), num(tr.values[s]), num(tr.stderrs[s]), num(tr.tail_mass[s]),
                 tr.tail_mass[s] > kTailMassThreshold ? "1" : "0"});
      write(std::string("regularity.") + to_string(kind) + ".csv", csv.text());
    }
    return 0;
  }

  std::size_t equivalence() {
    const Op f = observables_.front();
    EquivalenceOptions eo;
    eo.dt = cfg_.run.dt;
    eo.threads = threads_;
    const auto rep = weighted_equivalence_check(*model_, initial_, cfg_.equivalence_t, cfg_.run.M, cfg_.run.base_seed, f, eo);
    Csv csv({"observable_label", "t", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "combined_stderr", "linear_degenerate",
             "agrees"});
    csv.row({f.label, num(cfg_.equivalence_t), num(rep.lhs), num(rep.lhs_stderr), num(rep.rhs), num(rep.rhs_stderr),
             num(rep.combined_stderr), std::to_string(rep.linear_degenerate), rep.agrees() ? "1" : "0"});
    write("equivalence.summary.csv", csv.text());
    return 0;
  }

  std::size_t dissipativity() {
    const auto rep = check_dissipativity(*model_, model_->reference, cfg_.dissipativity_kind, cfg_.dissipativity_probes,
                                         cfg_.run.base_seed);
    Csv summary({"inequality_kind", "estimated_K", "max_violation", "reference_K", "basis_probes", "random_probes",
                 "argmax_basis_index"});
    summary.row({to_string(rep.inequality_kind), num(rep.estimated_K), num(rep.max_violation), num(rep.reference_K),
                 std::to_string(rep.basis_probes), std::to_string(rep.random_probes),
                 std::to_string(rep.argmax_basis_index)});
    write("dissipativity.summary.csv", summary.text());
    Csv basis({"n", "lhs"});
    for (int n = 0; n <= model_->interior_cutoff; ++n)
      basis.row({std::to_string(n), num(dissipativity_lhs(*model_, model_->reference, model_->space.basis(n)))});
    write("dissipativity.basis.csv", basis.text());
    return 0;
  }

  std::size_t stationary() {
    StationaryOptions so;
    so.burn_in = cfg_.stationary_burn_in ? *cfg_.stationary_burn_in : default_burn_in(*model_);
    so.window = cfg_.stationary_window;
    so.sample_stride = cfg_.stationary_stride;
    so.M = cfg_.stationary_M;
    so.base_seed = cfg_.run.base_seed;
    so.dt = cfg_.run.dt;
    so.threads = threads_;
    so.c_op = build_fock_ops(model_->space).n;
    if (!cfg_.stationary_burn_in) {
      // Round to the sampling stride so the window boundaries fall on samples.
      const double stride = so.sample_stride.value_or(10.0 * so.dt);
      so.burn_in = std::ceil(so.burn_in / stride) * stride;
    }
    const auto est = estimate_stationary(*model_, initial_, so);
    std::string predicates = "none";
    if (model_->kerr) {
      const auto& k = *model_->kerr;
      predicates = std::string("regular=") + (kerr_regularity_predicate(k.alpha[3], k.alpha[4]) ? "1" : "0") +
                   ";stationary=" + (est.certified ? "1" : "0");
    }
    Csv csv({"model", "predicates", "residual", "c_moment", "c_moment_stderr", "trN", "trN_stderr", "burn_in", "window",
             "M", "window_split_consistent", "converged"});
    csv.row({model_->name, predicates, num(est.residual_onenorm), num(est.c_moment), num(est.c_moment_stderr),
             num(est.number_mean), num(est.number_stderr), num(est.burn_in), num(est.window), std::to_string(est.M),
             est.window_split_consistent() ? "1" : "0", est.converged ? "1" : "0"});
    write("stationary.summary.csv", csv.text());
    write("stationary.rho_inf.mat.txt", matrix_dump(est.rho_inf.matrix()));
    return 0;
  }

  void write_manifest(const RunManifest& man) {
    nlohmann::ordered_json j;
    j["config_hash"] = man.config_hash;
    j["tool_version"] = man.tool_version;
    j["files"] = man.files;
    j["defaults_applied"] = cfg_.defaults_applied;
    j["threads"] = threads_;
    auto& tasks = j["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : man.tasks) {
      nlohmann::ordered_json e;
      e["task"] = t.task;
      e["seconds"] = t.seconds;
      e["fault_count"] = t.fault_count;
      e["status"] = t.error.empty() ? "ok" : "fault";
      if (!t.error.empty()) e["error"] = t.error;
      tasks.push_back(e);
    }
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << j.dump(2) << "\n";
  }

  const RunConfig& cfg_;
  fs::path dir_;
  int threads_;
  std::shared_ptr<ModelSpec> model_;
  PureState initial_;
  std::vector<Op> observables_;
  std::map<SseKind, std::shared_ptr<TrajectoryBatch>> batches_;
  std::vector<std::string> files_;
};

}  // namespace

RunManifest execute(const RunConfig& config, const ExecuteOptions& options) {
  const fs::path dir = options.output_dir.value_or(config.output_dir);
  fs::create_directories(dir);
  Session session(config, dir, options.threads.value_or(config.run.threads));
  return session.run();
}

}  // namespace qtraj
