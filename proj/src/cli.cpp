#include "bwflow/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwflow/analytic.hpp"
#include "bwflow/bogoliubov.hpp"
#include "bwflow/conditions.hpp"
#include "bwflow/flow.hpp"
#include "bwflow/fock.hpp"
#include "bwflow/specio.hpp"

namespace bwflow::cli {

namespace {

using nlohmann::json;

struct RunConfig {
  double tEnd = 10.0;
  double tol = 1e-10;
  std::string method = "rk";
  double convTol = 1e-8;
  bool positiveScalarSign = false;
  double sampleInterval = 0.0;
  std::string grid;  // a:b:h
  std::string csvPath;
  std::string fitWindow;
  std::string jsonPath;
  int cutoff = 40;
  int sectorCut = -1;  // unset: min(12, cutoff / (2 modes + 1))
  double conjTime = 2.0;
  double eps = conditions::kDefaultEps;

  double scalar_sign() const { return positiveScalarSign ? flow::kPositiveScalarSign : flow::kOracleScalarSign; }

  flow::FlowControls controls() const {
    if (!(tol > 0.0) || !(convTol > 0.0)) throw Error(ErrorKind::ParseError, "tolerances must be positive");
    if (!(tEnd > 0.0)) throw Error(ErrorKind::ParseError, "tEnd must be positive");
    flow::FlowControls c;
    c.tol = tol;
    c.convTol = convTol;
    c.scalarSign = scalar_sign();
    c.sampleInterval = sampleInterval;
    if (method == "split")
      c.method = flow::Method::split;
    else if (method != "rk")
      throw Error(ErrorKind::ParseError, "method must be rk or split");
    return c;
  }
};

struct Grid {
  double begin = 0.0;
  double end = 0.0;
  double step = 0.0;
};

Grid parse_grid(const std::string& text) {
  Grid g;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> g.begin >> c1 >> g.end >> c2 >> g.step) || c1 != ':' || c2 != ':' || !(g.step > 0.0) ||
      g.end < g.begin || g.begin < 0.0)
    throw Error(ErrorKind::ParseError, "grid must look like begin:end:step with 0 <= begin <= end, step > 0");
  return g;
}

std::pair<double, double> parse_window(const std::string& text) {
  double a = 0, b = 0;
  char c = 0;
  std::istringstream in(text);
  if (!(in >> a >> c >> b) || c != ':' || !(b > a)) throw Error(ErrorKind::ParseError, "window must be begin:end");
  return {a, b};
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

json number_or_sentinel(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return x;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

void print_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << " =\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << "  ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::ostringstream cell;
      cell << std::setprecision(8) << m(i, j).real() << (m(i, j).imag() < 0 ? "-" : "+")
           << std::abs(m(i, j).imag()) << "i";
      out << std::setw(26) << cell.str();
    }
    out << '\n';
  }
}

void emit_json(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) return;
  if (path == "-") {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorKind::ParseError, "cannot write '" + path + "'");
  file << doc.dump(2) << '\n';
}

// ---- check ----

int cmd_check(const std::string& specPath, const RunConfig& cfg, std::ostream& out) {
  QuadraticSpec spec = io::read_spec_file(specPath);
  conditions::ConditionReport report = conditions::check_all(spec, cfg.eps, cfg.tol);
  json doc;
  doc["label"] = spec.label;
  doc["epsExponent"] = report.epsExponent;
  using conditions::Condition;
  const Condition all[] = {Condition::A1, Condition::A2, Condition::A3, Condition::A4,
                           Condition::A5, Condition::A6, Condition::FB, Condition::KM};
  if (cfg.jsonPath != "-") {
    out << "spec: " << (spec.label.empty() ? specPath : spec.label) << " (dim " << spec.dim() << ")\n";
    out << std::left << std::setw(6) << "cond" << std::setw(14) << "verdict"
        << "margin\n";
  }
  for (Condition c : all) {
    std::string name(conditions::to_string(c));
    std::string verdict(conditions::to_string(report.verdict(c)));
    auto m = report.margins.find(c);
    doc["verdicts"][name] = verdict;
    if (m != report.margins.end()) doc["margins"][name] = number_or_sentinel(m->second);
    if (cfg.jsonPath != "-")
      out << std::setw(6) << name << std::setw(14) << verdict << (m != report.margins.end() ? fmt(m->second) : "-")
          << '\n';
  }
  auto optional_field = [&](const char* name, const std::optional<double>& v) {
    doc[name] = v ? number_or_sentinel(*v) : json(nullptr);
    if (cfg.jsonPath != "-") out << name << ": " << (v ? fmt(*v) : "-") << '\n';
  };
  optional_field("gapNu", report.gapNu);
  optional_field("gapNuMinus", report.gapNuMinus);
  optional_field("rConst", report.rConst);
  optional_field("kernelOverlap", report.kernelOverlap);
  optional_field("a4Norm", report.a4Norm);
  optional_field("a5Norm", report.a5Norm);
  emit_json(doc, cfg.jsonPath, out);
  bool ok = report.holds(Condition::A1) && report.holds(Condition::A2) && report.holds(Condition::A3);
  return ok ? kOk : kConditionFail;
}

// ---- run ----

struct RunOutcome {
  flow::Trajectory trajectory;
  int code = kOk;
};

flow::Trajectory run_flow(const QuadraticSpec& spec, const RunConfig& cfg, std::optional<Grid>& grid) {
  flow::FlowControls controls = cfg.controls();
  double tEnd = cfg.tEnd;
  if (!cfg.grid.empty()) {
    grid = parse_grid(cfg.grid);
    controls.sampleInterval = grid->step;
    tEnd = grid->end;
  }
  return flow::integrate(spec, tEnd, controls);
}

// CSV to `csvOut` when the path is "-", summary to `out`.
int report_run(const QuadraticSpec& spec, const flow::Trajectory& traj, const RunConfig& cfg,
               const std::optional<Grid>& grid, std::ostream& csvOut, std::ostream& out) {
  if (!cfg.csvPath.empty()) {
    std::vector<io::CsvRow> rows;
    for (const auto& s : traj.samples)
      if (!grid || s.state.t >= grid->begin - 1e-12) rows.push_back(io::csv_row(s));
    if (cfg.csvPath == "-") {
      io::write_csv(csvOut, rows);
    } else {
      std::ofstream file(cfg.csvPath);
      if (!file) throw Error(ErrorKind::ParseError, "cannot write '" + cfg.csvPath + "'");
      io::write_csv(file, rows);
    }
  }
  const auto& last = traj.back();
  out << "label: " << spec.label << '\n';
  for (const auto& e : traj.events)
    out << "event: " << flow::to_string(e.kind) << " at t=" << fmt(e.t) << " (" << e.detail << ")\n";
  out << "steps: accepted " << traj.stats.accepted << ", rejected " << traj.stats.rejected << '\n';
  double worstMotion = 0, worstK = 0, worstBelow = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    worstMotion = std::max(worstMotion, s.diag.motionResidual);
    worstK = std::max(worstK, s.diag.kNorm);
    worstBelow = std::min(worstBelow, s.diag.omegaBelowInitial);
  }
  if (auto blow = traj.event(flow::EventKind::blowup)) {
    out << "blowup: |B_t| diverging, onset t*=" << fmt(blow->t) << " (T_max estimate)\n";
    out << "local existence bound T0 = (128 |B_0|)^-1 = " << fmt(blow->localExistenceBound) << '\n';
    return kBlowup;
  }
  flow::LimitResult limit = flow::limit_extract(traj, cfg.convTol);
  out << "converged: " << (limit.converged ? "yes" : "no") << " (|B_T| = " << fmt(limit.finalHsB) << " at T = "
      << fmt(last.state.t) << ")\n";
  RealVector eig = eigvals_hermitian(limit.omegaInf);
  out << "omegaInf eigenvalues:";
  for (Eigen::Index i = 0; i < eig.size(); ++i) out << ' ' << fmt(eig(i));
  out << '\n';
  out << "cInf: " << fmt(limit.cInf) << " (scalar sign " << fmt(cfg.scalar_sign()) << ")\n";
  out << "trace identity residual: " << fmt(limit.traceIdentityResidual) << '\n';
  if (limit.commutingLimitResidual) out << "commuting limit residual: " << fmt(*limit.commutingLimitResidual) << '\n';
  try {
    auto [a, b] = cfg.fitWindow.empty() ? std::pair{0.5 * last.state.t, last.state.t} : parse_window(cfg.fitWindow);
    flow::DecayFit fit = flow::decay_fit(traj, a, b);
    out << "decay rate: " << fmt(fit.rate) << " on [" << fmt(a) << ", " << fmt(b) << "]"
        << (fit.exponential ? "" : " (non-exponential, log-log slope " + fmt(fit.logLogSlope) + ")") << '\n';
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
    out << "decay rate: n/a (" << e.what() << ")\n";
  }
  out << "worst motion residual: " << fmt(worstMotion) << '\n';
  out << "worst kNorm: " << fmt(worstK) << '\n';
  out << "min eig(omega_0 - omega_t): " << fmt(worstBelow) << '\n';
  return kOk;
}

// With --csv - the summary moves to err so stdout stays machine readable.
int cmd_run(const std::string& specPath, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  QuadraticSpec spec = io::read_spec_file(specPath);
  std::optional<Grid> grid;
  flow::Trajectory traj = run_flow(spec, cfg, grid);
  return report_run(spec, traj, cfg, grid, out, cfg.csvPath == "-" ? err : out);
}

// ---- diag ----

int cmd_diag(const std::string& specPath, const RunConfig& cfg, std::ostream& out) {
  QuadraticSpec spec = io::read_spec_file(specPath);
  flow::Trajectory traj = flow::integrate(spec, cfg.tEnd, cfg.controls());
  if (auto blow = traj.event(flow::EventKind::blowup)) {
    out << "blowup at t=" << fmt(blow->t) << "; no limit map\n";
    return kBlowup;
  }
  flow::LimitResult limit = flow::limit_extract(traj, cfg.convTol);
  if (!limit.converged) {
    std::ostringstream msg;
    msg << "|B_T| = " << limit.finalHsB << " >= convTol " << cfg.convTol << " at T = " << traj.back().state.t;
    throw Error(ErrorKind::NotConverged, msg.str());
  }
  const double tFinal = traj.back().state.t;
  bogoliubov::TrajectoryPath path(traj);
  bogoliubov::BogoliubovMap map = bogoliubov::integrate_uv(path, 0.0, tFinal, cfg.tol);
  bogoliubov::SymplecticResiduals res = bogoliubov::symplectic_residuals(map);
  double intB = bogoliubov::integrate_hs_norm(path, 0.0, tFinal);
  bogoliubov::NormBounds bounds = bogoliubov::norm_bounds(map, intB);
  bogoliubov::GeneratorDecomposition dec = bogoliubov::decompose_generator(map);
  QuadraticSpec moved = bogoliubov::transform_spec(map, spec);
  const auto& fin = traj.back().state;
  double roundTrip = hs_norm(moved.omega.matrix() - fin.omega) + hs_norm(moved.b.matrix() - fin.b) +
                     std::abs(moved.c0 - fin.c);
  QuadraticSpec back = bogoliubov::transform_spec(bogoliubov::inverse(map), moved);
  double inverseTrip = hs_norm(back.omega.matrix() - spec.omega.matrix()) + hs_norm(back.b.matrix() - spec.b.matrix()) +
                       std::abs(back.c0 - spec.c0);

  std::ostringstream text;
  text << "label: " << spec.label << "\nT = " << fmt(tFinal) << '\n';
  print_matrix(text, "u", map.u);
  print_matrix(text, "v", map.v);
  text << "symplectic residuals: uu*-vv*-1 " << fmt(res.uuStar) << ", u*u-v^T vbar-1 " << fmt(res.uStarU)
      << ", uv^T-vu^T " << fmt(res.uvT) << ", u*v-v^T ubar " << fmt(res.uStarV) << '\n';
  text << "norm bounds (int |B| = " << fmt(intB) << "): 1+|u-1| = " << fmt(bounds.uLhs) << " <= " << fmt(bounds.uRhs)
      << (bounds.uHolds ? " ok" : " VIOLATED") << "; |v| = " << fmt(bounds.vLhs) << " <= " << fmt(bounds.vRhs)
      << (bounds.vHolds ? " ok" : " VIOLATED") << '\n';
  text << "alphas:";
  for (Eigen::Index k = 0; k < dec.alphas.size(); ++k)
    if (dec.alphas(k) > 1e-14) text << ' ' << fmt(dec.alphas(k));
  text << '\n';
  print_matrix(text, "hMatrix", dec.hMatrix);
  text << "reconstruction residual: " << fmt(dec.reconstructionResidual) << '\n';
  text << "transform round trip residual: " << fmt(roundTrip) << '\n';
  text << "inverse round trip residual: " << fmt(inverseTrip) << '\n';

  if (cfg.jsonPath != "-") out << text.str();

  json doc;
  doc["T"] = tFinal;
  doc["u"] = matrix_json(map.u);
  doc["v"] = matrix_json(map.v);
  doc["symplecticResiduals"] = {res.uuStar, res.uStarU, res.uvT, res.uStarV};
  doc["normBounds"] = {{"intB", intB}, {"uLhs", bounds.uLhs}, {"uRhs", bounds.uRhs},
                       {"vLhs", bounds.vLhs}, {"vRhs", bounds.vRhs}};
  std::vector<double> alphas(dec.alphas.data(), dec.alphas.data() + dec.alphas.size());
  doc["alphas"] = alphas;
  doc["hMatrix"] = matrix_json(dec.hMatrix);
  doc["transformRoundTrip"] = roundTrip;
  emit_json(doc, cfg.jsonPath, out);
  return kOk;
}

// ---- fock-verify ----

int cmd_fock_verify(const std::string& specPath, const RunConfig& cfg, std::ostream& out) {
  QuadraticSpec spec = io::read_spec_file(specPath);
  if (spec.dim() > 2) throw Error(ErrorKind::SizeLimit, "fock-verify supports at most 2 modes");
  // truncation error reaches the residual sector unless it sits well below the cutoff
  const int sectorCut =
      cfg.sectorCut < 0 ? std::min(12, cfg.cutoff / (2 * static_cast<int>(spec.dim()) + 1)) : cfg.sectorCut;
  if (sectorCut < 0 || sectorCut > cfg.cutoff - 4)
    throw Error(ErrorKind::ParseError, "sector cut must be in [0, cutoff - 4]");
  fock::TruncatedFock space(static_cast<int>(spec.dim()), cfg.cutoff);
  flow::FlowControls controls = cfg.controls();
  controls.scalarSign = flow::kOracleScalarSign;
  controls.stopTimes = {cfg.conjTime};
  double tEnd = std::max(cfg.tEnd, cfg.conjTime);
  flow::Trajectory traj = flow::integrate(spec, tEnd, controls);
  if (traj.blew_up()) {
    out << "blowup at t=" << fmt(traj.event(flow::EventKind::blowup)->t) << '\n';
    return kBlowup;
  }
  const flow::Sample* atConj = nullptr;
  for (const auto& s : traj.samples)
    if (std::abs(s.state.t - cfg.conjTime) < 1e-12) atConj = &s;
  if (!atConj) throw Error(ErrorKind::PathGap, "trajectory missed the conjugation time");

  bogoliubov::TrajectoryPath path(traj);
  fock::Propagator prop = fock::propagate(space, path, 0.0, cfg.conjTime, cfg.tol);
  const auto& st = atConj->state;
  double cMinus = st.c;
  double cPlus = 2.0 * spec.c0 - st.c;
  QuadraticSpec targetMinus{OneParticleOperator::hermitian(st.omega), OneParticleOperator::symmetric(st.b), cMinus, {}};
  QuadraticSpec targetPlus = targetMinus;
  targetPlus.c0 = cPlus;
  double resMinus = fock::conjugation_residual(space, prop.u, spec, targetMinus, sectorCut);
  double resPlus = fock::conjugation_residual(space, prop.u, spec, targetPlus, sectorCut);

  flow::LimitResult limit = flow::limit_extract(traj, cfg.convTol);
  double cInfMinus = limit.cInf;
  double cInfPlus = 2.0 * spec.c0 - limit.cInf;
  QuadraticSpec diagonal{OneParticleOperator::hermitian(limit.omegaInf),
                         OneParticleOperator::symmetric(Matrix::Zero(spec.dim(), spec.dim())), cInfMinus, {}};
  double nDiag = fock::n_diag_residual(space, fock::hamiltonian_op(space, diagonal));
  fock::GroundEnergy ground = fock::ground_energy(space, spec);
  double hermResidual = fock::hermiticity_residual(fock::hamiltonian_op(space, spec));

  out << "label: " << spec.label << "\nfock: " << space.modes() << " modes, cutoff " << space.cutoff() << ", dim "
      << space.dim() << ", sector cut " << sectorCut << '\n';
  out << std::left << std::setw(40) << "quantity" << std::setw(22) << "scalarSign=-1"
      << "scalarSign=+1\n";
  out << std::setw(40) << "conjugation residual at t=" + fmt(cfg.conjTime) << std::setw(22) << fmt(resMinus)
      << fmt(resPlus) << '\n';
  out << std::setw(40) << "c_t" << std::setw(22) << fmt(cMinus) << fmt(cPlus) << '\n';
  out << std::setw(40) << "cInf" << std::setw(22) << fmt(cInfMinus) << fmt(cInfPlus) << '\n';
  out << std::setw(40) << "ground energy - cInf" << std::setw(22) << fmt(ground.energy - cInfMinus)
      << fmt(ground.energy - cInfPlus) << '\n';
  out << "ground energy: " << fmt(ground.energy) << " (cutoff-4 change " << fmt(ground.convergenceEstimate) << ")\n";
  out << "unitarity residual: " << fmt(prop.unitarityResidual) << '\n';
  out << "n-diagonal residual of H(omegaInf, 0, cInf): " << fmt(nDiag) << '\n';
  out << "hermiticity residual of truncated H_0: " << fmt(hermResidual) << '\n';
  out << "limit converged: " << (limit.converged ? "yes" : "no") << '\n';
  return kOk;
}

// ---- oracle ----

struct OracleOutput {
  QuadraticSpec spec;
  std::string comment;
  std::function<std::optional<analytic::ExactState>(double)> exact;
};

OracleOutput build_oracle(const std::string& family, const std::vector<double>& p, double scalarSign) {
  auto need = [&](std::size_t n) {
    if (p.size() != n)
      throw Error(ErrorKind::OutOfRange, family + " expects " + std::to_string(n) + " parameters");
  };
  auto block_oracle = [&](analytic::BlockModelParams params, const std::string& label) {
    OracleOutput o{analytic::block_spec(params, label), "family: " + family, {}};
    o.exact = [params, scalarSign](double t) -> std::optional<analytic::ExactState> {
      return analytic::exact_block_state(params, t, 0.0, scalarSign);
    };
    return o;
  };
  if (family == "equal-product" || family == "generic") {
    need(3);
    analytic::Block block{p[0], p[1], p[2]};
    bool equal = analytic::is_equal_product(block);
    if (family == "equal-product" && !equal)
      throw Error(ErrorKind::OutOfRange, "equal-product needs omegaPlus*omegaMinus = 4b^2");
    if (family == "generic" && !(block.omegaMinus * block.omegaPlus > 4.0 * block.b * block.b) )
      throw Error(ErrorKind::OutOfRange, "generic needs omegaPlus*omegaMinus > 4b^2");
    std::ostringstream label;
    label << family << " " << p[0] << " " << p[1] << " " << p[2];
    return block_oracle({{block}}, label.str());
  }
  if (family == "block") {
    if (p.empty() || p.size() % 3 != 0) throw Error(ErrorKind::OutOfRange, "block expects triples");
    analytic::BlockModelParams params;
    for (std::size_t i = 0; i < p.size(); i += 3) params.blocks.push_back({p[i], p[i + 1], p[i + 2]});
    return block_oracle(params, "block");
  }
  if (family == "pivotal") {
    need(1);
    int k = static_cast<int>(p[0]);
    return block_oracle(analytic::pivotal_params(k), "pivotal K=" + std::to_string(k));
  }
  if (family == "mixed") {
    need(2);
    int k = static_cast<int>(p[1]);
    std::ostringstream label;
    label << "mixed b1=" << p[0] << " K=" << k;
    return block_oracle(analytic::mixed_params(p[0], k), label.str());
  }
  if (family == "blowup") {
    need(1);
    double b = p[0];
    analytic::BlowupState start = analytic::exact_blowup(b, 0.0);
    Matrix bm(2, 2);
    bm << 0, b, b, 0;
    std::ostringstream label;
    label << "blowup b=" << b;
    OracleOutput o{QuadraticSpec::make(Matrix::Zero(2, 2), bm, 0.0, label.str()), {}, {}};
    std::ostringstream comment;
    comment << std::setprecision(17) << "family: blowup\ntMax = " << start.tMax;
    o.comment = comment.str();
    o.exact = [b, scalarSign](double t) -> std::optional<analytic::ExactState> {
      if (t >= std::numbers::pi / (16.0 * b)) return std::nullopt;
      analytic::BlowupState s = analytic::exact_blowup(b, t);
      Matrix omega = s.omega * Matrix::Identity(2, 2);
      Matrix bt(2, 2);
      bt << 0, s.b, s.b, 0;
      return analytic::ExactState{omega, bt, 0.5 * scalarSign * (-omega.trace().real())};
    };
    return o;
  }
  throw Error(ErrorKind::OutOfRange, "unknown family '" + family + "'");
}

int cmd_oracle(const std::string& family, const std::vector<double>& params, const std::string& specOut,
               const std::string& csvGrid, const std::string& csvOut, const RunConfig& cfg, std::ostream& out) {
  OracleOutput oracle = build_oracle(family, params, cfg.scalar_sign());
  std::string text = io::write_spec(oracle.spec, oracle.comment);
  if (specOut.empty() || specOut == "-") {
    out << text;
  } else {
    std::ofstream file(specOut);
    if (!file) throw Error(ErrorKind::ParseError, "cannot write '" + specOut + "'");
    file << text;
  }
  if (csvGrid.empty()) return kOk;
  Grid grid = parse_grid(csvGrid);
  std::vector<io::CsvRow> rows;
  auto count = static_cast<long long>(std::floor(grid.end / grid.step + 1e-9));
  for (long long k = 0; k <= count; ++k) {
    double t = static_cast<double>(k) * grid.step;
    if (t < grid.begin - 1e-12) continue;
    auto exact = oracle.exact(t);
    if (!exact) break;
    flow::FlowState state{t, exact->omega, exact->b, exact->c};
    rows.push_back(io::csv_row({state, flow::motion_residuals(state, oracle.spec)}));
  }
  if (csvOut.empty() || csvOut == "-") {
    io::write_csv(out, rows);
  } else {
    std::ofstream file(csvOut);
    if (!file) throw Error(ErrorKind::ParseError, "cannot write '" + csvOut + "'");
    io::write_csv(file, rows);
  }
  return kOk;
}

// ---- error mapping ----

int code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::OutOfRange:
    case ErrorKind::NotOnManifold: return kParseError;
    case ErrorKind::BlowupDetected: return kBlowup;
    case ErrorKind::NotConverged: return kNotConverged;
    default: return kOtherError;
  }
}

template <class F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOtherError;
  }
}

int cmd_batch(const std::vector<std::string>& specs, int jobs, const RunConfig& cfg, std::ostream& out) {
  std::vector<std::string> reports(specs.size());
  std::vector<int> codes(specs.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      std::ostringstream body, err;
      codes[i] = guarded([&] { return cmd_run(specs[i], cfg, body, body); }, err);
      reports[i] = "== " + specs[i] + " (exit " + std::to_string(codes[i]) + ")\n" + body.str() + err.str();
    }
  };
  int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(specs.size(), 1)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& r : reports) out << r;
  return specs.empty() ? kOk : *std::max_element(codes.begin(), codes.end());
}

void add_flow_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--t-end", cfg.tEnd, "integration end time")->capture_default_str();
  cmd->add_option("--tol", cfg.tol, "per-step error tolerance")->capture_default_str();
  cmd->add_option("--method", cfg.method, "rk or split")->capture_default_str();
  cmd->add_option("--conv-tol", cfg.convTol, "convergence threshold on |B|_HS")->capture_default_str();
  cmd->add_flag("--positive-scalar-sign", cfg.positiveScalarSign, "use dC/dt = +8|B|^2");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic boson Hamiltonian flow toolkit", "bwflow"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string specPath;

  auto* check = app.add_subcommand("check", "evaluate the positivity/gap conditions of a spec");
  check->add_option("spec", specPath, "spec file")->required();
  check->add_option("--eps", cfg.eps, "epsilon exponent")->capture_default_str();
  check->add_option("--tol", cfg.tol, "margin tolerance")->capture_default_str();
  check->add_option("--json", cfg.jsonPath, "write the report as JSON (- for stdout)");

  auto* runCmd = app.add_subcommand("run", "integrate the flow and summarize");
  runCmd->add_option("spec", specPath, "spec file")->required();
  add_flow_options(runCmd, cfg);
  runCmd->add_option("--sample-interval", cfg.sampleInterval, "record every h instead of every step");
  runCmd->add_option("--grid", cfg.grid, "begin:end:step sample grid (overrides --t-end)");
  runCmd->add_option("--csv", cfg.csvPath, "trajectory CSV path (- for stdout)");
  runCmd->add_option("--fit-window", cfg.fitWindow, "begin:end window for the decay fit");

  auto* diag = app.add_subcommand("diag", "Bogoliubov map of a converged run");
  diag->add_option("spec", specPath, "spec file")->required();
  add_flow_options(diag, cfg);
  diag->add_option("--json", cfg.jsonPath, "write artifacts as JSON (- for stdout)");

  auto* fockCmd = app.add_subcommand("fock-verify", "truncated Fock space cross-checks");
  fockCmd->add_option("spec", specPath, "spec file")->required();
  add_flow_options(fockCmd, cfg);
  fockCmd->add_option("--cutoff", cfg.cutoff, "max total particle number")->capture_default_str();
  fockCmd->add_option("--sector-cut", cfg.sectorCut, "residual sector, <= cutoff - 4 (default min(12, cutoff / (2 modes + 1)))");
  fockCmd->add_option("--conj-time", cfg.conjTime, "time for the conjugation check")->capture_default_str();

  std::string family, specOut, csvGrid, csvOut;
  std::vector<double> params;
  auto* oracle = app.add_subcommand("oracle", "emit a closed-form family as spec and CSV");
  oracle->add_option("family", family, "equal-product|generic|blowup|block|pivotal|mixed")->required();
  oracle->add_option("params", params, "family parameters");
  oracle->add_option("--out", specOut, "spec output path (default stdout)");
  oracle->add_option("--csv", csvGrid, "begin:end:step grid for the exact trajectory");
  oracle->add_option("--csv-out", csvOut, "CSV output path (default stdout)");
  oracle->add_flag("--positive-scalar-sign", cfg.positiveScalarSign, "use dC/dt = +8|B|^2 for the c column");

  std::vector<std::string> batchSpecs;
  int jobs = 1;
  auto* batch = app.add_subcommand("batch", "run several specs");
  batch->add_option("specs", batchSpecs, "spec files")->required();
  batch->add_option("--jobs", jobs, "parallel workers")->capture_default_str();
  add_flow_options(batch, cfg);

  std::vector<std::string> argvStore{"bwflow"};
  argvStore.insert(argvStore.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argvStore) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParseError;
  }

  return guarded(
      [&] {
        if (*check) return cmd_check(specPath, cfg, out);
        if (*runCmd) return cmd_run(specPath, cfg, out, err);
        if (*diag) return cmd_diag(specPath, cfg, out);
        if (*fockCmd) return cmd_fock_verify(specPath, cfg, out);
        if (*oracle) return cmd_oracle(family, params, specOut, csvGrid, csvOut, cfg, out);
        if (*batch) return cmd_batch(batchSpecs, jobs, cfg, out);
        return kParseError;
      },
      err);
}

}  // namespace bwflow::cli
