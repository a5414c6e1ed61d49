#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "model_spec.hpp"
#include "mrfattn/approx.hpp"
#include "mrfattn/collapsed_vfe.hpp"
#include "mrfattn/csv.hpp"
#include "mrfattn/marginal_attention.hpp"
#include "mrfattn/mechanisms.hpp"
#include "mrfattn/oracle.hpp"
#include "mrfattn/pcn.hpp"

namespace mrfattn::cli {

namespace {

struct Options {
  // shared
  bool header = false;
  double beta = 1.0;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_iter = 100;
  std::string out, trace;

  // attend / selfattend
  std::string keys, queries, inputs, wq, wk, wv, posterior;
  // hopfield
  std::string patterns, query;
  // slots
  int num_slots = 0;
  std::string w, init, assign, norm = "weighted_mean";
  // blockslot / pcn / approx / oracle
  std::string config, instance, observations;
  int steps = 10;
  double step_size = 1e-2;
  std::string methods = "soft";
  std::size_t samples = 1;
};

Mat load(const std::string& path, const Options& o) {
  const Mat m = read_csv_file(path, o.header);
  if (m.size() == 0) throw std::invalid_argument(path + ": CSV file is empty");
  return m;
}

Mat load_or_identity(const std::string& path, const Options& o, Eigen::Index d) {
  return path.empty() ? Mat::Identity(d, d) : load(path, o);
}

void write_matrix(const std::string& path, const Mat& m) {
  if (!path.empty()) write_csv_file(path, m);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot write " + path);
  f << text;
}

Mat posterior_matrix(const EdgePosterior& p) {
  Eigen::Index width = 0;
  for (const Vec& r : p.rows) width = std::max(width, r.size());
  Mat m = Mat::Zero(static_cast<Eigen::Index>(p.size()), width);
  for (std::size_t i = 0; i < p.size(); ++i) m.row(static_cast<Eigen::Index>(i)).head(p[i].size()) = p[i].transpose();
  return m;
}

FixedPointNormalization parse_norm(const std::string& s) {
  if (s == "raw_sum") return FixedPointNormalization::raw_sum;
  if (s == "weighted_mean") return FixedPointNormalization::weighted_mean;
  throw std::invalid_argument("--norm must be raw_sum or weighted_mean");
}

std::string trace_text(const CCCPState& st) {
  std::ostringstream os;
  write_trace_csv(os, st);
  return os.str();
}

// ---------------------------------------------------------------------------

void cmd_attend(const Options& o, std::ostream& out, bool self) {
  const Mat keys = load(self ? o.inputs : o.keys, o);
  const Mat queries = self ? keys : load(o.queries, o);
  const Eigen::Index d = keys.cols();
  const Mat wq = load_or_identity(o.wq, o, d);
  const Mat wk = load_or_identity(o.wk, o, d);
  const Mat wv = load_or_identity(o.wv, o, d);
  const Mat result = closed_form_cross_attention(queries, keys, wq, wk, wv, o.beta);

  const Mat bilinear = wq.transpose() * wk;
  const PairwiseMRF mrf = self ? self_attention_mrf(keys, bilinear, o.beta)
                               : cross_attention_mrf(queries, keys, bilinear, o.beta);
  const std::vector<Vec> via_mrf = attend(mrf, ValueSpec{wv});
  const Mat diff = stack_rows(via_mrf) - result;

  write_matrix(o.out, result);
  write_matrix(o.posterior, posterior_matrix(edge_posterior(mrf)));
  out << (self ? "selfattend" : "attend") << ": queries=" << queries.rows() << " keys=" << keys.rows()
      << " max_abs_diff_mrf_vs_closed_form=" << format_double(diff.cwiseAbs().maxCoeff()) << '\n';
}

void cmd_hopfield(const Options& o, std::ostream& out) {
  HopfieldConfig cfg;
  cfg.patterns = load(o.patterns, o);
  const Eigen::Index d = cfg.patterns.cols();
  cfg.w_q = load_or_identity(o.wq, o, d);
  cfg.w_k = load_or_identity(o.wk, o, d);
  cfg.beta = o.beta;
  const Mat q = load(o.query, o);
  if (q.size() != d) throw std::invalid_argument("--query must hold exactly d values");
  cfg.query = q.reshaped();

  const auto [mu, st] = hopfield_retrieve(cfg, o.tol, o.max_iter);
  const Mat images = cfg.patterns * (cfg.w_q.transpose() * cfg.w_k).transpose();
  Eigen::Index nearest = 0;
  (images.rowwise() - mu.transpose()).rowwise().norm().minCoeff(&nearest);

  write_matrix(o.out, mu.transpose());
  write_text(o.trace, trace_text(st));
  out << "hopfield: iterations=" << st.iteration << " converged=" << (st.converged ? "true" : "false")
      << " F=" << format_double(st.f_trace.back()) << " nearest_pattern=" << nearest << '\n';
}

void cmd_slots(const Options& o, std::ostream& out) {
  SlotConfig cfg;
  cfg.inputs = load(o.inputs, o);
  const Eigen::Index d = cfg.inputs.cols();
  cfg.w = load_or_identity(o.w, o, d);
  cfg.beta = o.beta;
  cfg.seed = o.seed;
  if (!o.init.empty()) {
    cfg.init = SlotInit::given;
    cfg.initial = load(o.init, o);
    cfg.num_slots = static_cast<int>(cfg.initial.rows());
  } else {
    if (o.num_slots < 1) throw std::invalid_argument("--num-slots or --init is required");
    cfg.num_slots = o.num_slots;
  }
  const SlotResult res = run_slots(cfg, parse_norm(o.norm), o.tol, o.max_iter);

  write_matrix(o.out, res.slots);
  if (!o.assign.empty()) {
    std::ostringstream os;
    for (int a : res.assignment) os << a << '\n';
    write_text(o.assign, os.str());
  }
  write_text(o.trace, trace_text(res.state));
  out << "slots: iterations=" << res.state.iteration << " converged=" << (res.state.converged ? "true" : "false")
      << " F=" << format_double(res.state.f_trace.back()) << '\n';
}

void cmd_blockslot(const Options& o, std::ostream& out) {
  const KeyValueFile kv = KeyValueFile::load(o.config);
  const BlockSlotConfig cfg = load_block_slot(kv, o.seed);
  const bool shared_beta = !cfg.memory_beta || *cfg.memory_beta == cfg.slots.beta;
  if (!o.trace.empty() && !shared_beta) {
    throw std::invalid_argument("--trace needs a shared slot/memory temperature");
  }
  Mat slots = initial_slots(cfg.slots);
  std::ostringstream trace;
  auto record = [&](int step, double change) {
    if (!shared_beta) return;
    const double f = free_energy(block_slot_mrf(cfg, slots), mat_to_means(slots));
    if (!std::isfinite(f)) throw NumericError("block-slot free energy is not finite at step " + std::to_string(step));
    trace << step << ',' << format_double(f) << ',' << format_double(change) << '\n';
  };
  record(0, 0.0);
  for (int t = 1; t <= o.steps; ++t) {
    Mat next = block_slot_step(cfg, slots);
    if (!next.allFinite()) throw NumericError("block-slot update diverged at step " + std::to_string(t));
    const double change = (next - slots).cwiseAbs().maxCoeff();
    slots = std::move(next);
    record(t, change);
  }
  write_matrix(o.out, slots);
  write_text(o.trace, trace.str());
  out << "blockslot: steps=" << o.steps << " slots=" << slots.rows() << " blocks=" << cfg.block_dims.size() << '\n';
}

void cmd_pcn(const Options& o, std::ostream& out) {
  const KeyValueFile kv = KeyValueFile::load(o.config);
  const PcnSpec spec = load_pcn(kv, o.seed);
  const Mat obs = load(o.observations, o);
  if (obs.size() != spec.net.sizes()[0]) throw std::invalid_argument("--observations must match layer 0");
  const RelaxTrace tr = relax(spec.net, obs.reshaped(), spec.init, o.steps, o.step_size);

  if (!o.out.empty()) {
    std::ostringstream os;
    for (std::size_t l = 0; l < tr.values.size(); ++l) {
      for (Eigen::Index i = 0; i < tr.values[l].size(); ++i) os << l << ',' << i << ',' << format_double(tr.values[l][i]) << '\n';
    }
    write_text(o.out, os.str());
  }
  if (!o.trace.empty()) {
    std::ostringstream os;
    for (std::size_t t = 0; t < tr.energy.size(); ++t) os << t << ',' << format_double(tr.energy[t]) << '\n';
    write_text(o.trace, os.str());
  }
  out << "pcn: steps=" << o.steps << " F=" << format_double(tr.energy.back()) << '\n';
}

void cmd_approx(const Options& o, std::ostream& out) {
  const ModelSpec model = load_model(KeyValueFile::load(o.instance));
  std::vector<ApproxMethod> methods;
  std::stringstream ss(o.methods);
  std::string tok;
  while (std::getline(ss, tok, ',')) methods.push_back(ApproxMethod::parse(tok));
  if (methods.empty()) throw std::invalid_argument("--methods is empty");
  SeededRng rng(o.seed);
  const ApproxReport report = compare(model.mrf, model.values, methods, rng, o.samples);

  std::ostringstream os;
  write_report_csv(os, report);
  write_text(o.out, os.str());
  out << "approx:";
  for (const MethodReport& r : report.methods) {
    double kl = 0.0;
    for (double v : r.kl_per_edge_var) kl += v;
    out << ' ' << r.method.name() << "(kl_sum=" << format_double(kl) << ",output_error=" << format_double(r.output_error)
        << ')';
  }
  out << '\n';
}

void cmd_oracle(const Options& o, std::ostream& out) {
  const ModelSpec model = load_model(KeyValueFile::load(o.instance));
  const EdgePosterior factorized = edge_posterior(model.mrf);
  const oracle::JointTable table = oracle::enumerate_joint(model.mrf);
  const EdgePosterior joint = oracle::joint_marginals(model.mrf, table);
  double max_diff = 0.0;
  std::ostringstream os;
  for (std::size_t i = 0; i < factorized.size(); ++i) {
    for (Eigen::Index c = 0; c < factorized[i].size(); ++c) {
      max_diff = std::max(max_diff, std::abs(factorized[i][c] - joint[i][c]));
      os << i << ',' << c << ',' << format_double(factorized[i][c]) << ',' << format_double(joint[i][c]) << '\n';
    }
  }
  write_text(o.out, os.str());
  const double f = free_energy(model.mrf, model.mrf.nodes().latent());
  out << "oracle: configs=" << table.configs.size() << " max_abs_marginal_diff=" << format_double(max_diff)
      << " F_factorized=" << format_double(f) << " F_joint=" << format_double(oracle::joint_free_energy(table))
      << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention as marginal inference over latent edge structures", "mrfattn"};
  app.require_subcommand(1);
  Options o;
  std::function<void()> action;

  auto common = [&](CLI::App* sub) {
    sub->add_flag("--header", o.header, "Skip the first line of every input CSV");
  };
  auto existing = [](CLI::App* sub, const std::string& name, std::string& target, const std::string& help,
                     bool required) {
    auto* opt = sub->add_option(name, target, help)->check(CLI::ExistingFile);
    if (required) opt->required();
  };

  auto* attend_cmd = app.add_subcommand("attend", "Cross attention: closed form plus MRF posterior");
  common(attend_cmd);
  existing(attend_cmd, "--keys", o.keys, "n x d keys CSV", true);
  existing(attend_cmd, "--queries", o.queries, "m x d queries CSV", true);
  existing(attend_cmd, "--wq", o.wq, "d_k x d W_Q CSV (default identity)", false);
  existing(attend_cmd, "--wk", o.wk, "d_k x d W_K CSV (default identity)", false);
  existing(attend_cmd, "--wv", o.wv, "d_out x d W_V CSV (default identity)", false);
  attend_cmd->add_option("--beta", o.beta, "Softmax temperature")->check(CLI::PositiveNumber);
  attend_cmd->add_option("--out", o.out, "Output rows CSV");
  attend_cmd->add_option("--posterior", o.posterior, "Posterior (attention matrix) CSV");
  attend_cmd->callback([&] { action = [&] { cmd_attend(o, out, false); }; });

  auto* self_cmd = app.add_subcommand("selfattend", "Self attention: closed form plus MRF posterior");
  common(self_cmd);
  existing(self_cmd, "--inputs", o.inputs, "n x d inputs CSV", true);
  existing(self_cmd, "--wq", o.wq, "d_k x d W_Q CSV (default identity)", false);
  existing(self_cmd, "--wk", o.wk, "d_k x d W_K CSV (default identity)", false);
  existing(self_cmd, "--wv", o.wv, "d_out x d W_V CSV (default identity)", false);
  self_cmd->add_option("--beta", o.beta, "Softmax temperature")->check(CLI::PositiveNumber);
  self_cmd->add_option("--out", o.out, "Output rows CSV");
  self_cmd->add_option("--posterior", o.posterior, "Posterior (attention matrix) CSV");
  self_cmd->callback([&] { action = [&] { cmd_attend(o, out, true); }; });

  auto* hop_cmd = app.add_subcommand("hopfield", "Associative retrieval by fixed-point iteration");
  common(hop_cmd);
  existing(hop_cmd, "--patterns", o.patterns, "n x d stored patterns CSV", true);
  existing(hop_cmd, "--query", o.query, "Query vector CSV (d values)", true);
  existing(hop_cmd, "--wq", o.wq, "W_Q CSV (default identity)", false);
  existing(hop_cmd, "--wk", o.wk, "W_K CSV (default identity)", false);
  hop_cmd->add_option("--beta", o.beta, "Softmax temperature")->check(CLI::PositiveNumber);
  hop_cmd->add_option("--tol", o.tol, "Stop when |dF| < tol")->check(CLI::PositiveNumber);
  hop_cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  hop_cmd->add_option("--out", o.out, "Retrieved vector CSV");
  hop_cmd->add_option("--trace", o.trace, "Free-energy trace CSV (iteration,F,grad_norm)");
  hop_cmd->callback([&] { action = [&] { cmd_hopfield(o, out); }; });

  auto* slot_cmd = app.add_subcommand("slots", "Slot attention (softmax over slots)");
  common(slot_cmd);
  existing(slot_cmd, "--inputs", o.inputs, "n x d inputs CSV", true);
  existing(slot_cmd, "--w", o.w, "d x d bilinear form CSV (default identity)", false);
  existing(slot_cmd, "--init", o.init, "Initial slots CSV (otherwise seeded)", false);
  slot_cmd->add_option("--num-slots", o.num_slots, "Number of slots when --init is absent")->check(CLI::PositiveNumber);
  slot_cmd->add_option("--beta", o.beta, "Softmax temperature")->check(CLI::PositiveNumber);
  slot_cmd->add_option("--seed", o.seed, "Seed for slot initialization");
  slot_cmd->add_option("--norm", o.norm, "raw_sum or weighted_mean")->check(CLI::IsMember({"raw_sum", "weighted_mean"}));
  slot_cmd->add_option("--tol", o.tol, "Stop when |dF| < tol")->check(CLI::PositiveNumber);
  slot_cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  slot_cmd->add_option("--out", o.out, "Final slots CSV");
  slot_cmd->add_option("--assign", o.assign, "Argmax slot per input");
  slot_cmd->add_option("--trace", o.trace, "Free-energy trace CSV (iteration,F,grad_norm)");
  slot_cmd->callback([&] { action = [&] { cmd_slots(o, out); }; });

  auto* block_cmd = app.add_subcommand("blockslot", "Block-slot attention with block memories");
  common(block_cmd);
  existing(block_cmd, "--config", o.config, "Block-slot description file", true);
  block_cmd->add_option("--steps", o.steps, "Number of updates")->check(CLI::NonNegativeNumber);
  block_cmd->add_option("--seed", o.seed, "Seed for slot initialization");
  block_cmd->add_option("--out", o.out, "Final slots CSV");
  block_cmd->add_option("--trace", o.trace, "Trace CSV (step,F,max_abs_change)");
  block_cmd->callback([&] { action = [&] { cmd_blockslot(o, out); }; });

  auto* pcn_cmd = app.add_subcommand("pcn", "Predictive coding relaxation");
  common(pcn_cmd);
  existing(pcn_cmd, "--config", o.config, "Network description file", true);
  existing(pcn_cmd, "--observations", o.observations, "Layer-0 values CSV", true);
  pcn_cmd->add_option("--steps", o.steps, "Euler steps")->check(CLI::NonNegativeNumber);
  pcn_cmd->add_option("--step-size", o.step_size, "Euler step size")->check(CLI::PositiveNumber);
  pcn_cmd->add_option("--seed", o.seed, "Seed for hidden-layer initialization");
  pcn_cmd->add_option("--out", o.out, "Final values CSV (layer,node,value)");
  pcn_cmd->add_option("--trace", o.trace, "Energy trace CSV (step,F)");
  pcn_cmd->callback([&] { action = [&] { cmd_pcn(o, out); }; });

  auto* approx_cmd = app.add_subcommand("approx", "Information loss of hard and top-k attention");
  common(approx_cmd);
  existing(approx_cmd, "--instance", o.instance, "Model description file", true);
  approx_cmd->add_option("--methods", o.methods, "Comma list of soft, hard, top<k>");
  approx_cmd->add_option("--samples", o.samples, "Hard-attention samples")->check(CLI::PositiveNumber);
  approx_cmd->add_option("--seed", o.seed, "Master seed");
  approx_cmd->add_option("--out", o.out, "Report CSV (edge_var,method,kl,entropy,output_error,cost)");
  approx_cmd->callback([&] { action = [&] { cmd_approx(o, out); }; });

  auto* oracle_cmd = app.add_subcommand("oracle", "Joint enumeration vs factorized posterior");
  common(oracle_cmd);
  existing(oracle_cmd, "--instance", o.instance, "Model description file", true);
  oracle_cmd->add_option("--out", o.out, "CSV (edge_var,candidate,factorized,joint)");
  oracle_cmd->callback([&] { action = [&] { cmd_oracle(o, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    action();
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace mrfattn::cli
