// Command-line front end. Every subcommand prints key=value lines; exit
// codes: 0 ok/holds, 1 fails, 2 usage or input error, 3 budget refusal.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lll/corollaries.hpp"
#include "lll/engine.hpp"
#include "lll/exhaustive.hpp"
#include "lll/fireworks.hpp"
#include "lll/galton_watson.hpp"
#include "lll/io.hpp"
#include "lll/layerwise.hpp"
#include "lll/report.hpp"
#include "lll/toy_corpus.hpp"
#include "lll/trials.hpp"
#include "lll/witness.hpp"

namespace {

using namespace lll;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kFails = 1, kUsage = 2, kBudget = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string join_values(const std::vector<Value>& values) {
  bool binary = std::all_of(values.begin(), values.end(), [](Value v) { return v < 2; });
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!binary && i) out += ',';
    out += std::to_string(values[i]);
  }
  return out.empty() ? "-" : out;
}

Rational rational_flag(const std::string& text, const std::string& flag) {
  try {
    return parse_rational(text);
  } catch (const ParseError&) {
    throw UsageError("bad rational for " + flag + ": '" + text + "'");
  }
}

/// z and alpha from flags, falling back to the file.
LLLParams resolve_params(const SystemFile& file, const std::string& z_flag, const std::string& alpha_flag,
                         bool require_z = true) {
  LLLParams params;
  if (file.params) params = *file.params;
  if (!z_flag.empty()) params.z.assign(file.system.num_events(), rational_flag(z_flag, "--z"));
  if (!alpha_flag.empty()) params.alpha = rational_flag(alpha_flag, "--alpha");
  if (require_z && params.z.size() != file.system.num_events())
    throw UsageError("no z weights: add z lines to the file or pass --z");
  return params;
}

struct Common {
  std::uint64_t seed = 1;
  unsigned bit_guard = kDefaultBitGuard;
  std::size_t max_steps = 10000000;
  unsigned workers = 1;
};

// ------------------------------------------------------------ subcommands

int cmd_check(const std::string& path, const std::string& z, const std::string& alpha, Report& out) {
  SystemFile file = load_system_file(path);
  LLLParams params = resolve_params(file, z, alpha);
  ConditionReport rep = check_computable_lll(file.system, params);
  std::size_t equal = 0;
  for (const auto& row : rep.rows) {
    out.line().add("event", row.event).add("lhs", row.lhs).add("rhs", row.rhs).add("holds", row.holds);
    equal += row.lhs == row.rhs;
  }
  out.line().add("alpha", rep.alpha).add("avoid_bound", rep.avoid_bound);
  out.line().add("equality_rows", equal).add("all_hold", rep.all_hold);
  std::set<std::size_t> sizes;
  for (const auto& e : file.system.events()) sizes.insert(e.vbl.size());
  if (sizes.size() == 1 && *sizes.begin() >= 2 && *sizes.begin() <= 40) {
    auto m = static_cast<unsigned>(*sizes.begin());
    FixedCnfReport f = fixed_cnf_params(file.system, m, params.alpha);
    out.line().add("fixed_m", m).add("fixed_rhs", f.rhs).add("max_neighbors", f.max_neighbors).add("fixed_holds", f.holds);
  }
  return rep.all_hold ? kOk : kFails;
}

int cmd_solve(const std::string& path, const std::string& z, const std::string& tape_hex, std::size_t trials,
              const Common& c, Report& out) {
  SystemFile file = load_system_file(path);
  const ConstraintSystem& system = file.system;
  if (trials > 1) {
    if (!tape_hex.empty()) throw UsageError("--tape and --trials cannot be combined");
    TrialStats stats = run_trials(system, trials, c.seed, c.workers, c.max_steps);
    out.line().add("trials", trials).add("satisfied", stats.satisfied).add("verified", stats.verified);
    out.line().add("mean_resamples", stats.mean()).add("std_error", std::to_string(stats.std_error()));
    if (!z.empty() || file.params) out.set("expected_bound", expected_steps_bound(resolve_params(file, z, "").z));
    if (stats.satisfied < trials) return kBudget;
    return stats.verified == trials ? kOk : kFails;
  }
  Tape tape = tape_hex.empty() ? Tape::seeded(c.seed) : Tape::from_bits(from_hex(tape_hex));
  RunOptions options;
  options.max_steps = c.max_steps;
  options.record_log = false;
  RunResult r;
  try {
    r = run_finite(system, tape, options);
  } catch (const RunInterrupted& e) {
    out.line().add("status", "tape_exhausted").add("resamples", e.partial.resample_count);
    return kBudget;
  }
  bool ok = satisfies_all(system, r.assignment);
  out.line().add("status", to_string(r.status)).add("resamples", r.resample_count).add("verified", ok);
  out.set("assignment", join_values(r.assignment));
  if (!z.empty() || file.params) out.set("expected_bound", expected_steps_bound(resolve_params(file, z, "").z));
  if (r.status != RunStatus::satisfied) return kBudget;
  return ok ? kOk : kFails;
}

std::unique_ptr<InfiniteFamily> make_family(const std::string& kind, unsigned m, std::size_t stride,
                                            const std::string& z, const std::string& forbidden,
                                            const std::string& gamma, const std::string& alpha,
                                            std::optional<unsigned> M) {
  if (kind == "chain") return std::make_unique<ChainCnfFamily>(m, stride, rational_flag(z, "--z"));
  if (kind == "substring") {
    if (forbidden.empty()) throw UsageError("--forbidden is required for the substring family");
    Rational g = rational_flag(gamma, "--gamma"), a = rational_flag(alpha, "--alpha");
    BetaM bm = compute_beta_M(g, a);
    return std::make_unique<ForbiddenSubstringFamily>(load_forbidden_file(forbidden), g, M.value_or(bm.M), bm.beta);
  }
  throw UsageError("unknown family '" + kind + "' (chain, substring)");
}

int cmd_stream(InfiniteFamily& family, std::size_t events, std::size_t cells, const Common& c, Report& out) {
  Tape tape = Tape::seeded(c.seed);
  RunOptions options;
  options.max_steps = c.max_steps;
  RunResult r = run_stream(family, events, tape, options);
  bool ok = true;
  ConstraintSystem prefix = materialize(family, events);
  ok = satisfies_all(prefix, r.assignment);
  std::vector<Value> head(r.assignment.begin(), r.assignment.begin() + std::min(cells, r.assignment.size()));
  out.line().add("events", events).add("variables", r.assignment.size()).add("status", to_string(r.status));
  out.line().add("resamples", r.resample_count).add("verified", ok);
  if (auto T = first_k_stable_time(r.log, prefix, events)) out.set("stable_step", *T);
  out.set("cells", join_values(head));
  if (r.status != RunStatus::satisfied) return kBudget;
  return ok ? kOk : kFails;
}

int cmd_witness(const std::string& path, const std::string& tape_hex, std::size_t step, bool all, const Common& c,
                Report& out) {
  SystemFile file = load_system_file(path);
  Tape tape = tape_hex.empty() ? Tape::seeded(c.seed) : Tape::from_bits(from_hex(tape_hex));
  RunOptions options;
  options.max_steps = c.max_steps;
  RunResult r = run_finite(file.system, tape, options);
  out.line().add("status", to_string(r.status)).add("resamples", r.resample_count);
  if (r.log.steps.empty()) {
    out.set("trees", 0);
    return kOk;
  }
  bool ok = true;
  auto describe = [&](std::size_t k) {
    WitnessTree t = build_witness_tree(r.log, k, file.system);
    bool valid = validate_tree(t, file.system).valid;
    bool match = positions_match_log(t, reconstruct_tape_positions(t, file.system), r.log);
    ok = ok && valid && match;
    out.line().add("step", k).add("tree", t.canonical()).add("size", t.size()).add("valid", valid)
        .add("positions_match", match).add("bound", tree_probability_bound(t, file.system));
    return t;
  };
  if (all) {
    trees_for_run(r.log, file.system);  // throws on a repeated tree
    for (std::size_t k = 1; k <= r.log.steps.size(); ++k) describe(k);
  } else {
    if (step == 0) step = r.log.steps.size();
    if (step > r.log.steps.size()) throw UsageError("--step beyond the number of resamplings");
    WitnessTree t = describe(step);
    std::istringstream lines(t.indented());
    for (std::string l; std::getline(lines, l);) out.set("indented", "'" + l + "'");
  }
  return ok ? kOk : kFails;
}

int cmd_gw(const std::string& path, const std::string& z, const std::string& alpha, unsigned bits, const Common& c,
           Report& out) {
  SystemFile file = load_system_file(path);
  LLLParams params = resolve_params(file, z, alpha);
  MtVsGwReport rep = check_mt_vs_gw(file.system, params, bits, c.bit_guard);
  for (const auto& row : rep.rows)
    out.line().add("tree", row.tree).add("size", row.size).add("p_mt_lower", row.p_mt_lower)
        .add("p_mt_upper", row.p_mt_upper).add("p_gw", row.p_gw).add("bound", row.bound)
        .add("certified", row.certified);
  for (const auto& [root, mass] : rep.gw_mass_by_root) out.line().add("root", root).add("gw_mass", mass);
  out.line().add("condition_holds", rep.condition_holds).add("alpha_used", rep.alpha_used)
      .add("unresolved_mass", rep.unresolved_mass);
  out.line().add("violations", rep.violations).add("certified", rep.certified);
  return rep.certified ? kOk : kFails;
}

/// "HEAD(CYCLE)=MASS", e.g. "(1)=3/5" or "01(0)=1/4".
TableOracle::Atom parse_atom(const std::string& text, std::size_t arity) {
  auto open = text.find('('), close = text.find(')'), eq = text.find('=');
  if (open == std::string::npos || close == std::string::npos || eq == std::string::npos || close < open || eq < close)
    throw UsageError("atom must look like HEAD(CYCLE)=MASS, got '" + text + "'");
  auto digits = [&](const std::string& s) {
    Tuple t;
    for (char ch : s) {
      if (ch < '0' || ch > '9' || static_cast<std::size_t>(ch - '0') >= arity)
        throw UsageError("bad cell value in atom '" + text + "'");
      t.push_back(static_cast<Value>(ch - '0'));
    }
    return t;
  };
  return {digits(text.substr(0, open)), digits(text.substr(open + 1, close - open - 1)),
          rational_flag(text.substr(eq + 1), "--atom")};
}

int cmd_extract(const std::vector<std::string>& atoms, std::size_t arity, const std::string& r_text,
                const std::string& w_text, std::size_t cells, const std::string& system_path, Report& out) {
  std::unique_ptr<QOracle> oracle;
  if (!system_path.empty()) {
    oracle = std::make_unique<MtOutputOracle>(load_system_file(system_path).system);
  } else {
    if (atoms.empty()) throw UsageError("pass --atom (repeatable) or --system");
    std::vector<TableOracle::Atom> list;
    for (const auto& a : atoms) list.push_back(parse_atom(a, arity));
    oracle = std::make_unique<TableOracle>(arity, std::move(list));
  }
  Extraction ex;
  std::vector<Value> w;
  for (char ch : w_text) w.push_back(static_cast<Value>(ch - '0'));
  try {
    if (r_text.empty()) {
      if (!w.empty()) throw UsageError("--w needs --r");
      ex = extract_positive_branch(*oracle, cells);
    } else {
      ex = extract_from_positive_probability(*oracle, rational_flag(r_text, "--r"), w, cells);
    }
  } catch (const ContractViolation& e) {
    out.set("contract_violation", std::string("'") + e.what() + "'");
    return kFails;
  }
  out.line().add("mode", r_text.empty() ? "positive" : "threshold").add("values", join_values(ex.values));
  for (std::size_t i = 0; i < ex.values.size(); ++i)
    out.line().add("cell", w.size() + i).add("value", ex.values[i]).add("lower", ex.lower[i]).add("precision", ex.rounds[i]);
  out.set("queries", ex.queries);
  return kOk;
}

int cmd_prefix(const std::string& path, const std::string& z, const std::string& alpha, std::size_t length,
               const std::string& mode, std::size_t trials, const std::string& delta, const Common& c, Report& out) {
  SystemFile file = load_system_file(path);
  LLLParams params = resolve_params(file, z, alpha);
  PrefixResult res;
  if (mode == "exact") {
    res = compute_assignment_prefix_exact(file.system, params, length, c.bit_guard);
  } else if (mode == "empirical") {
    if (params.alpha >= 1) throw UsageError("empirical mode needs --alpha < 1");
    if (!check_computable_lll(file.system, params).all_hold) {
      out.set("condition_holds", false);
      return kFails;
    }
    FiniteFamily family(file.system, params.z);
    res = compute_assignment_prefix_empirical(family, params.alpha, length, trials, c.seed,
                                              rational_flag(delta, "--delta"));
  } else {
    throw UsageError("--mode must be exact or empirical");
  }
  out.line().add("mode", mode).add("length", length).add("prefix", join_values(res.values));
  if (mode == "exact") out.line().add("certified", res.certified).add("measure_lower", res.measure_lower);
  for (std::size_t i = 0; i < res.certificates.size(); ++i)
    out.line().add("cell", i).add("N", res.certificates[i].N).add("stable", res.stable[i]).add("agreement", res.agreement[i]);
  return kOk;
}

int cmd_avoid(const std::string& forbidden, const std::string& gamma, const std::string& alpha, std::size_t length,
              const std::string& mode, std::optional<unsigned> M, std::size_t trials, const Common& c, Report& out) {
  AvoidOptions options;
  if (mode == "exact") options.mode = PrefixMode::exact;
  else if (mode == "empirical") options.mode = PrefixMode::empirical;
  else throw UsageError("--mode must be exact or empirical");
  options.seed = c.seed;
  options.trials = trials;
  options.M_override = M;
  options.guard = c.bit_guard;
  AvoidResult res = build_avoiding_sequence(load_forbidden_file(forbidden), rational_flag(gamma, "--gamma"),
                                            rational_flag(alpha, "--alpha"), length, options);
  out.line().add("beta", res.beta_M.beta).add("M_certified", res.beta_M.M).add("M", res.M)
      .add("fails_below", res.beta_M.fails_below);
  out.line().add("kept", res.kept.size()).add("rejected", res.rejected.size()).add("events", res.events_used)
      .add("condition_holds", res.condition_holds);
  out.line().add("length", length).add("scan", res.scan_ok ? "pass" : "fail");
  out.set("prefix", join_values(res.bits));
  return res.scan_ok ? kOk : kFails;
}

int cmd_fireworks(Natural n, std::optional<Natural> K, const std::string& oracle_spec, std::optional<Natural> k,
                  Natural budget, const Common& c, Report& out) {
  GameConfig config{n, K};
  config.validate();
  out.line().add("n", n).add("win_probability_exact", win_probability_exact(n));
  if (K) out.line().add("seller_K", *K).add("loss_probability", loss_probability_exact(config));
  if (!oracle_spec.empty()) {
    auto f = make_builtin_oracle(oracle_spec);
    BeatResult r;
    if (k) {
      if (*k >= n) throw UsageError("--k must be below --n");
      r = beat_function_with_k(*f, *k, budget);
    } else {
      Tape tape = Tape::seeded(c.seed);
      r = beat_function(*f, Rational(BigInt(1), BigInt(n)), tape, budget);
    }
    std::vector<Value> head;
    for (std::size_t i = 0; i < std::min<std::size_t>(r.g.size(), 64); ++i) head.push_back(static_cast<Value>(r.g[i]));
    out.line().add("oracle", "'" + f->name() + "'").add("k", r.k).add("status", to_string(r.status))
        .add("ticks", r.ticks).add("g_defined", r.g.size());
    if (r.beaten_at) out.line().add("beaten_at", *r.beaten_at).add("g_value", r.g.back());
    std::string g;
    for (std::size_t i = 0; i < head.size(); ++i) g += (i ? "," : "") + std::to_string(r.g[i]);
    out.set("g", g.empty() ? "-" : g);
    out.set("success_probability", beat_success_probability(*f, n, budget));
  }
  return kOk;
}

int cmd_selftest(unsigned bits, const Common& c, Report& out) {
  bool all = true;
  for (const auto& toy : toy_corpus()) {
    ExhaustiveReport ex = enumerate_witness_trees(toy.system, bits, c.bit_guard);
    std::size_t lemma_bad = 0;
    for (const auto& row : check_tree_lemma(ex, toy.system)) lemma_bad += !row.certified;
    MtVsGwReport gw = check_mt_vs_gw(toy.system, toy.params, bits, c.bit_guard);
    bool ok = lemma_bad == 0 && gw.certified;
    all = all && ok;
    out.line().add("system", toy.name).add("trees", ex.trees.size()).add("unresolved_mass", ex.unresolved_mass)
        .add("lemma_uncertified", lemma_bad).add("gw_certified", gw.certified).add("ok", ok);
  }
  out.set("all_certified", all);
  return all ? kOk : kFails;
}

// ------------------------------------------------------------ dispatch

struct Outcome {
  int code = kOk;
  std::string output;
  json echo = json::object();
  std::string subcommand;
};

Outcome dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Resampling-algorithm toolkit: local-lemma checks, witness trees, computable prefixes"};
  app.require_subcommand(1);
  Common c;
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Write a JSON manifest (inputs, parameters, output)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Seed for counter-based tapes");
    sub->add_option("--bit-guard", c.bit_guard, "Largest explicit-tape bit budget for exhaustive work");
    sub->add_option("--max-steps", c.max_steps, "Resampling step budget");
    sub->add_option("--workers", c.workers, "Threads for repeated trials");
  };

  std::string path, z, alpha, tape_hex;
  auto* check = app.add_subcommand("check", "Check the local-lemma condition");
  check->add_option("file", path, "System file (.cnf/.dimacs or system format)")->required();
  check->add_option("--z", z, "Uniform z (overrides file)");
  check->add_option("--alpha", alpha, "Strengthening factor");

  std::size_t trials = 1;
  auto* solve = app.add_subcommand("solve", "Run the resampling algorithm");
  solve->add_option("file", path)->required();
  solve->add_option("--tape", tape_hex, "Explicit tape as <bits>:<hex>");
  solve->add_option("--z", z, "Uniform z for the expected-steps bound (overrides file)");
  solve->add_option("--trials", trials, "Repeat with seeds seed, seed+1, ...");
  common(solve);

  std::string family_kind = "chain", forbidden, gamma = "1/2";
  unsigned m = 4;
  std::size_t stride = 2, events = 100, cells = 32;
  std::optional<unsigned> M;
  auto* stream = app.add_subcommand("stream", "Run on a prefix of an infinite family");
  stream->add_option("--family", family_kind, "chain or substring");
  stream->add_option("--m", m, "Clause size (chain)");
  stream->add_option("--stride", stride, "Clause offset (chain)");
  stream->add_option("--z", z, "z for every clause (chain)");
  stream->add_option("--forbidden", forbidden, "Forbidden strings file (substring)");
  stream->add_option("--gamma", gamma);
  stream->add_option("--alpha", alpha);
  stream->add_option("--M", M, "Minimal kept length (substring)");
  stream->add_option("--events", events, "Number of events to materialize");
  stream->add_option("--cells", cells, "Cells to print");
  common(stream);

  std::size_t step = 0;
  bool all = false;
  auto* witness = app.add_subcommand("witness", "Witness trees of a run");
  witness->add_option("file", path)->required();
  witness->add_option("--tape", tape_hex);
  witness->add_option("--step", step, "1-based step (default: last)");
  witness->add_flag("--all", all, "Every step");
  common(witness);

  unsigned bits = 16;
  auto* gw = app.add_subcommand("gw", "Exhaustive comparison with the branching-process bound");
  gw->add_option("file", path)->required();
  gw->add_option("--z", z);
  gw->add_option("--alpha", alpha);
  gw->add_option("--bits", bits, "Explicit-tape bit budget");
  common(gw);

  std::vector<std::string> atoms;
  std::size_t arity = 2;
  std::string r_text, w_text, system_path;
  auto* extract = app.add_subcommand("extract", "Extract a computable branch from a tree measure");
  extract->add_option("--atom", atoms, "HEAD(CYCLE)=MASS, repeatable");
  extract->add_option("--arity", arity);
  extract->add_option("--system", system_path, "Use the output law of a finite system instead of atoms");
  extract->add_option("--r", r_text, "Threshold (omit for the positive-branch rule)");
  extract->add_option("--w", w_text, "Starting prefix");
  extract->add_option("--cells", cells);

  std::size_t length = 8;
  std::string mode = "exact", delta = "1/16";
  auto* prefix = app.add_subcommand("prefix", "Compute a prefix of an avoiding assignment");
  prefix->add_option("file", path)->required();
  prefix->add_option("--z", z);
  prefix->add_option("--alpha", alpha);
  prefix->add_option("--length", length);
  prefix->add_option("--mode", mode, "exact or empirical");
  prefix->add_option("--trials", trials);
  prefix->add_option("--delta", delta, "Stability error per cell (empirical)");
  common(prefix);

  auto* avoid = app.add_subcommand("avoid", "Binary sequence avoiding long forbidden factors");
  avoid->add_option("--forbidden", forbidden, "One string per line")->required();
  avoid->add_option("--gamma", gamma);
  avoid->add_option("--alpha", alpha, "Default 99/100");
  avoid->add_option("--length", length);
  avoid->add_option("--mode", mode, "exact or empirical (default)");
  avoid->add_option("--M", M, "Override the certified M");
  avoid->add_option("--trials", trials);
  common(avoid);

  Natural n = 100, budget = 1000;
  std::optional<Natural> seller_K, k;
  std::string oracle_spec;
  auto* fireworks = app.add_subcommand("fireworks", "The fireworks game and beating a computable bound");
  fireworks->add_option("--n", n);
  fireworks->add_option("--seller-K", seller_K);
  fireworks->add_option("--oracle", oracle_spec, "constant:C, identity or diverge-at:P,Q,...");
  fireworks->add_option("--k", k, "Fix k instead of drawing it");
  fireworks->add_option("--budget", budget, "Tick budget");
  common(fireworks);

  auto* selftest = app.add_subcommand("selftest", "Exhaustive checks on the built-in toy systems");
  selftest->add_option("--bits", bits);
  common(selftest);

  Outcome result;
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);  // CLI11 consumes a reversed vector
  } catch (const CLI::CallForHelp&) {
    result.output = app.help();  // the selected subcommand's help, if any
    return result;
  }

  Report out;
  CLI::App* sub = app.get_subcommands().front();
  result.subcommand = sub->get_name();
  out.line().add("tool", "lll").add("version", kVersion).add("subcommand", result.subcommand);
  for (const CLI::Option* opt : sub->get_options())
    if (opt->count() > 0 && opt->get_name() != "--help") result.echo[opt->get_name()] = opt->as<std::string>();

  if (sub == check) result.code = cmd_check(path, z, alpha, out);
  else if (sub == solve) result.code = cmd_solve(path, z, tape_hex, trials, c, out);
  else if (sub == stream) {
    if (family_kind == "chain" && z.empty()) z = "1/4";
    if (alpha.empty()) alpha = "99/100";
    auto family = make_family(family_kind, m, stride, z, forbidden, gamma, alpha, M);
    result.code = cmd_stream(*family, events, cells, c, out);
  } else if (sub == witness) result.code = cmd_witness(path, tape_hex, step, all, c, out);
  else if (sub == gw) result.code = cmd_gw(path, z, alpha, bits, c, out);
  else if (sub == extract) result.code = cmd_extract(atoms, arity, r_text, w_text, cells, system_path, out);
  else if (sub == prefix) result.code = cmd_prefix(path, z, alpha, length, mode, trials, delta, c, out);
  else if (sub == avoid) {
    if (alpha.empty()) alpha = "99/100";
    if (sub->count("--mode") == 0) mode = "empirical";
    result.code = cmd_avoid(forbidden, gamma, alpha, length, mode, M, trials, c, out);
  }
  else if (sub == fireworks) result.code = cmd_fireworks(n, seller_K, oracle_spec, k, budget, c, out);
  else if (sub == selftest) result.code = cmd_selftest(bits, c, out);
  out.set("exit", result.code);
  result.output = out.str();
  result.echo["manifest_path"] = manifest_path;
  return result;
}

int run_guarded(const std::vector<std::string>& args, std::string& output, std::string& errors,
                std::string& subcommand, json& options) {
  try {
    Outcome o = dispatch(args);
    output = o.output;
    subcommand = o.subcommand;
    options = o.echo;
    options.erase("manifest_path");
    return o.code;
  } catch (const CLI::ParseError& e) {
    errors = std::string("error=") + e.what() + "\n";
    return kUsage;
  } catch (const UsageError& e) {
    errors = std::string("error=") + e.what() + "\n";
    return kUsage;
  } catch (const BudgetExceeded& e) {
    errors = std::string("budget_refused=") + e.what() + "\n";
    return kBudget;
  } catch (const TapeExhausted& e) {
    errors = std::string("budget_refused=") + e.what() + "\n";
    return kBudget;
  } catch (const ContractViolation& e) {
    errors = std::string("contract_violation=") + e.what() + "\n";
    return kFails;
  } catch (const Error& e) {
    errors = std::string("error=") + e.what() + "\n";
    return kUsage;
  }
}

// Runs one command line. When `manifest` is given and the line names a
// manifest path, it is filled even for failing runs, so errors replay too.
int run(const std::vector<std::string>& args, std::string& output, std::string& errors, json* manifest) {
  std::string subcommand;
  json options = json::object();
  int code = run_guarded(args, output, errors, subcommand, options);
  if (!manifest) return code;
  std::string path;
  std::vector<std::string> replay_args;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      if (i + 1 < args.size()) path = args[i + 1];
      ++i;
      continue;
    }
    if (args[i].rfind("--manifest=", 0) == 0) {
      path = args[i].substr(11);
      continue;
    }
    replay_args.push_back(args[i]);
  }
  if (path.empty()) return code;
  if (subcommand.empty() && !replay_args.empty() && replay_args[0].rfind('-', 0) != 0) subcommand = replay_args[0];
  *manifest = {{"tool", "lll"},   {"version", kVersion}, {"subcommand", subcommand}, {"args", replay_args},
               {"options", options}, {"exit", code},       {"output", output},         {"errors", errors},
               {"path", path}};
  return code;
}

int replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error=cannot open " << path << "\n";
    return kUsage;
  }
  json m;
  std::vector<std::string> args;
  try {
    m = json::parse(in);
    args = m.at("args").get<std::vector<std::string>>();
    m.at("exit").get<int>();
    m.at("output").get<std::string>();
  } catch (const json::exception& e) {
    std::cerr << "error=bad manifest: " << e.what() << "\n";
    return kUsage;
  }
  std::string output, errors;
  int code = run(args, output, errors, nullptr);
  bool same = output == m["output"].get<std::string>() && errors == m.value("errors", std::string()) &&
              code == m["exit"].get<int>();
  std::cout << "replay=" << (same ? "match" : "mismatch") << " exit=" << code << "\n";
  return same ? kOk : kFails;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && (args[0] == "--help" || args[0] == "-h")) {
    std::cout << "usage: lll <check|solve|stream|witness|gw|extract|prefix|avoid|fireworks|selftest|replay> ...\n";
    return kOk;
  }
  if (!args.empty() && args[0] == "replay") {
    if (args.size() != 2) {
      std::cerr << "error=usage: lll replay <manifest.json>\n";
      return kUsage;
    }
    return replay(args[1]);
  }
  std::string output, errors;
  json manifest = nullptr;
  int code = run(args, output, errors, &manifest);
  std::cout << output;
  std::cerr << errors;
  if (!manifest.is_null()) {
    std::ofstream mf(manifest["path"].get<std::string>());
    manifest.erase("path");
    mf << manifest.dump(2) << "\n";
    if (!mf) {
      std::cerr << "error=cannot write manifest\n";
      return kUsage;
    }
  }
  return code;
}
