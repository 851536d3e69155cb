#include "kurv/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "kurv/certifier.hpp"
#include "kurv/fibration.hpp"
#include "kurv/hermitian.hpp"
#include "kurv/jets.hpp"
#include "kurv/ke.hpp"
#include "kurv/models.hpp"
#include "kurv/report.hpp"
#include "kurv/rng.hpp"

namespace kurv::cli {
namespace {

using report::json;
namespace fs = std::filesystem;

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

json cjson(Cplx c) { return json::array({c.real(), c.imag()}); }

// non-finite doubles have no JSON literal; they serialize as null
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json point_json(const jets::ChartPoint& p) {
  json z = json::array(), v = json::array();
  for (Cplx c : p.z) z.push_back(cjson(c));
  for (Cplx c : p.v) v.push_back(cjson(c));
  return json{{"z", z}, {"v", v}};
}

json points_json(std::span<const jets::ChartPoint> pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(point_json(p));
  return a;
}

json flags_json(const models::Flags& f) {
  return {{"fiberwise_positive", f.fiberwise_positive},
          {"base_negative_hsc", f.base_negative_hsc},
          {"base_negative_hbc", f.base_negative_hbc},
          {"griffiths_negative_vertical", f.griffiths_negative_vertical},
          {"ke_family", f.ke_family},
          {"effectively_parametrized", f.effectively_parametrized}};
}

std::map<std::string, double> parse_params(
    const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    std::size_t used = 0;
    double val = 0.0;
    if (eq != std::string::npos) {
      try {
        val = std::stod(kv.substr(eq + 1), &used);
      } catch (const std::exception&) {
        used = 0;
      }
    }
    if (eq == std::string::npos || used != kv.size() - eq - 1)
      throw BadArgument("--param expects name=number, got \"" + kv + "\"");
    out[kv.substr(0, eq)] = val;
  }
  return out;
}

// "(re,im) (re,im) ; (re,im)" — base coordinates, semicolon, fiber
// coordinates; empty text means the origin
jets::ChartPoint parse_point(const std::string& text,
                             const models::ModelSpec& spec) {
  jets::ChartPoint p;
  p.z.assign(spec.m, Cplx(0.0));
  p.v.assign(spec.n, Cplx(0.0));
  if (text.empty()) return p;
  const auto semi = text.find(';');
  if (semi == std::string::npos)
    throw BadArgument("point: expected \"z... ; v...\" with entries (re,im)");
  auto read_list = [&](const std::string& part, std::vector<Cplx>& into,
                       const char* side, std::size_t want) {
    std::istringstream is(part);
    std::vector<Cplx> got;
    Cplx c;
    while (is >> c) got.push_back(c);
    is.clear();
    std::string rest;
    is >> rest;
    if (!rest.empty())
      throw BadArgument(std::string("point: cannot parse ") + side +
                        " entry \"" + rest + "\"");
    if (got.size() != want)
      throw BadArgument(std::string("point: ") + side + " needs " +
                        std::to_string(want) + " entries, got " +
                        std::to_string(got.size()));
    into = got;
  };
  read_list(text.substr(0, semi), p.z, "base", p.z.size());
  read_list(text.substr(semi + 1), p.v, "fiber", p.v.size());
  spec.require_inside(p);
  return p;
}

std::vector<double> parse_kgrid(const std::string& text) {
  if (text.rfind("geometric:", 0) == 0) {
    double a = 0.0, b = 0.0;
    int count = 0;
    if (std::sscanf(text.c_str(), "geometric:%lf:%lf:%d", &a, &b, &count) != 3)
      throw BadArgument("k-grid: expected geometric:A:B:COUNT");
    if (!(a > 0.0) || !(b > a) || count < 2)
      throw BadArgument("k-grid: need 0 < A < B and COUNT >= 2");
    std::vector<double> ks(count);
    for (int i = 0; i < count; ++i)
      ks[i] = a * std::pow(b / a, static_cast<double>(i) / (count - 1));
    ks.front() = a;
    ks.back() = b;
    return ks;
  }
  std::vector<double> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      ks.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw BadArgument("k-grid: cannot parse \"" + tok + "\"");
    }
  }
  return ks;
}

std::vector<jets::ChartPoint> draw_points(const models::ModelSpec& spec,
                                          int count, std::uint64_t seed) {
  if (count < 1) throw BadArgument("need at least one point");
  rng::Stream st(rng::derive_stream(seed, 101));
  std::vector<jets::ChartPoint> pts(count);
  for (auto& p : pts) {
    for (int a = 0; a < spec.m; ++a)
      p.z.push_back(st.disk(spec.base_radius * 0.9));
    for (int i = 0; i < spec.n; ++i)
      p.v.push_back(st.disk(spec.fiber_radius * 0.9));
  }
  return pts;
}

double block_max(const fibration::Block4& B) {
  double peak = 0.0;
  for (const auto& b : B)
    for (const auto& c : b)
      for (const auto& d : c)
        for (const Cplx& e : d) peak = std::max(peak, std::abs(e));
  return peak;
}

std::vector<Cplx> lift_direction(const fibration::RawCurvature& rc,
                                 const fibration::DirectionPair& d) {
  std::vector<Cplx> X(rc.m + rc.n, Cplx(0.0));
  for (int a = 0; a < rc.m; ++a) X[a] = d.a[a];
  for (int i = 0; i < rc.n; ++i) {
    Cplx vi = d.b.empty() ? Cplx(0.0) : d.b[i];
    for (int a = 0; a < rc.m; ++a) vi -= d.a[a] * rc.lift[a][i];
    X[rc.m + i] = vi;
  }
  return X;
}

// Output plumbing shared by every subcommand: stamp the envelope, print the
// human summary (or the whole envelope under --json), drop files in --out.
struct Sink {
  std::ostream& out;
  std::ostream& err;
  bool json_out = false;
  std::string out_dir;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();

  Sink(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  int emit(report::ReportEnvelope env, const std::string& stem,
           const std::string& human,
           const std::vector<std::pair<std::string, std::string>>& files = {}) {
    env.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    report::finalize(env);
    if (json_out)
      out << json(env).dump(2) << '\n';
    else
      out << human << "determinism hash: " << env.determinism_hash << '\n';
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream jf(fs::path(out_dir) / (stem + ".json"));
      jf << json(env).dump(2) << '\n';
      for (const auto& [name, body] : files) {
        std::ofstream ff(fs::path(out_dir) / name);
        ff << body;
      }
    }
    return env.exit_status;
  }
};

// ---------------------------------------------------------------- models list

int cmd_models(Sink& sink) {
  report::ReportEnvelope env;
  env.command = "models list";
  json list = json::array();
  std::ostringstream hs;
  for (const auto& e : models::catalog()) {
    json pj = json::array();
    for (const auto& ps : e.params)
      pj.push_back({{"name", ps.name},
                    {"default", ps.def},
                    {"min", ps.lo},
                    {"max", ps.hi}});
    list.push_back({{"name", e.name},
                    {"summary", e.summary},
                    {"m", e.m},
                    {"n", e.n},
                    {"dims_adjustable", e.dims_adjustable},
                    {"base_radius", e.base_radius},
                    {"fiber_radius", e.fiber_radius},
                    {"params", pj},
                    {"flags", flags_json(e.flags)}});
    hs << e.name << "  (m=" << e.m << ", n=" << e.n
       << (e.dims_adjustable ? ", adjustable" : "") << ")\n    " << e.summary
       << "\n";
    for (const auto& ps : e.params)
      hs << "    --param " << ps.name << "=" << ps.def << "   range ["
         << ps.lo << ", " << ps.hi << "]\n";
  }
  env.payload = {{"models", std::move(list)}};
  return sink.emit(std::move(env), "models", hs.str());
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string model = "product_poincare";
  std::vector<std::string> params;
  int points = 25;
  std::uint64_t seed = 2024;
  double tol = 1e-8;
};

int cmd_verify(Sink& sink, const VerifyArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto pts = draw_points(spec, a.points, a.seed);

  double oracle = 0.0, horiz = 0.0, mixed = 0.0, herm = 0.0;
  double c_norm = 0.0, mu_norm = 0.0;
  for (const auto& p : pts) {
    const auto fj = fibration::make_jet(spec, p);
    // the oracle and the reality check invert omega_k, so lift k to the
    // positivity threshold first (synthetic jets need k well above 1)
    double kpos = 1.0;
    while (kpos < 1e9) {
      const auto om = fibration::omega_metric(fj, kpos);
      if (om.horizontal_positive && om.vertical_positive) break;
      kpos *= 2.0;
    }
    for (double k : {kpos, 3.0 * kpos})
      oracle = std::max(
          oracle, fibration::curvature_gap(
                      fibration::adapted_curvature_blocks(fj, k),
                      fibration::generic_frame_oracle(fj, k)));
    const auto dec = fibration::decomposition_check(fj);
    horiz = std::max(horiz, dec.horizontal_residual);
    mixed = std::max(mixed, dec.mixed_residual);

    const auto rc = fibration::raw_curvature(fj, kpos);
    const int N = spec.m + spec.n;
    double scale = 1e-12;
    for (int P = 0; P < N; ++P)
      for (int Q = 0; Q < N; ++Q)
        for (int A = 0; A < N; ++A)
          for (int B = 0; B < N; ++B)
            scale = std::max(scale, std::abs(rc.tensor[P][Q][A][B]));
    for (int P = 0; P < N; ++P)
      for (int Q = 0; Q < N; ++Q) {
        herm = std::max(herm, std::abs(rc.metric[P][Q] -
                                       std::conj(rc.metric[Q][P])));
        for (int A = 0; A < N; ++A)
          for (int B = 0; B < N; ++B)
            herm = std::max(
                herm, std::abs(rc.tensor[P][Q][A][B] -
                               std::conj(rc.tensor[Q][P][B][A])) /
                          scale);
      }

    const auto c = fibration::geodesic_curvature(fj);
    for (const auto& row : c)
      for (const Cplx& e : row) c_norm = std::max(c_norm, std::abs(e));
    const auto mu = fibration::kodaira_spencer(fj);
    for (const auto& ma : mu)
      for (const auto& mk : ma)
        for (const Cplx& e : mk) mu_norm = std::max(mu_norm, std::abs(e));
  }

  // c(phi) and mu must vanish exactly for fiberwise-isometric KE families;
  // elsewhere their size is reported but nothing is enforced
  const bool trivial_family =
      spec.flags.ke_family && !spec.flags.effectively_parametrized;
  struct Check {
    const char* name;
    double residual;
    bool enforced;
  };
  const Check checks[] = {
      {"oracle_equivalence", oracle, true},
      {"decomposition_horizontal", horiz, true},
      {"decomposition_mixed", mixed, true},
      {"reality", herm, true},
      {"frame_invariance", std::max(c_norm, mu_norm), trivial_family},
  };

  json cj = json::array();
  bool all_pass = true;
  std::ostringstream hs;
  hs << "verify identities: " << spec.name << ", " << a.points
     << " points, tol " << fmt("%.1e", a.tol) << "\n";
  for (const auto& c : checks) {
    const bool pass = !c.enforced || c.residual <= a.tol;
    all_pass = all_pass && pass;
    cj.push_back({{"name", c.name},
                  {"max_residual", num(c.residual)},
                  {"tolerance", a.tol},
                  {"enforced", c.enforced},
                  {"pass", pass}});
    hs << "  " << (pass ? "pass " : "FAIL ") << c.name << "  "
       << fmt("%.3e", c.residual) << (c.enforced ? "" : "  (informational)")
       << "\n";
  }

  report::ReportEnvelope env;
  env.command = "verify identities";
  env.params = {{"model", a.model},
                {"param", parse_params(a.params)},
                {"points", a.points},
                {"seed", a.seed},
                {"tol", a.tol}};
  env.seeds = {a.seed};
  env.payload = {{"model", spec.name},
                 {"checks", std::move(cj)},
                 {"all_pass", all_pass}};
  env.exit_status = all_pass ? 0 : 1;
  return sink.emit(std::move(env), "verify", hs.str());
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string model = "sheared_poincare";
  std::vector<std::string> params;
  std::string point;
  double k = 3.0;
};

int cmd_analyze(Sink& sink, const AnalyzeArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto p = parse_point(a.point, spec);
  const auto fj = fibration::make_jet(spec, p);
  const auto blocks = fibration::adapted_curvature_blocks(fj, a.k);
  const auto om = fibration::omega_metric(fj, a.k);
  const auto rc = fibration::raw_curvature(fj, a.k);

  fibration::DirectionPair eh{std::vector<Cplx>(spec.m, Cplx(0.0)),
                              std::vector<Cplx>(spec.n, Cplx(0.0))};
  eh.a[0] = 1.0;
  fibration::DirectionPair ev{std::vector<Cplx>(spec.m, Cplx(0.0)),
                              std::vector<Cplx>(spec.n, Cplx(0.0))};
  ev.b[0] = 1.0;
  fibration::DirectionPair em = eh;
  em.b[0] = 1.0;

  const auto Xh = lift_direction(rc, eh);
  const auto Xv = lift_direction(rc, ev);
  const auto Xm = lift_direction(rc, em);
  const double hsc_h = hermitian::hsc(rc.tensor, rc.metric, Xh);
  const double hsc_v = hermitian::hsc(rc.tensor, rc.metric, Xv);
  const double hsc_m = hermitian::hsc(rc.tensor, rc.metric, Xm);
  const double hbc_hv = hermitian::hbc(rc.tensor, rc.metric, Xh, Xv);
  const double gap = fibration::curvature_gap(
      blocks, fibration::generic_frame_oracle(fj, a.k));

  json bj = {{"hh_hh", block_max(blocks.hh_hh)},
             {"vv_hh", block_max(blocks.vv_hh)},
             {"vv_vv", block_max(blocks.vv_vv)},
             {"vv_vh", block_max(blocks.vv_vh)},
             {"vv_hv", block_max(blocks.vv_hv)},
             {"hv_hv", block_max(blocks.hv_hv)},
             {"hh_vh", block_max(blocks.hh_vh)}};

  report::ReportEnvelope env;
  env.command = "analyze";
  env.params = {{"model", a.model},
                {"param", parse_params(a.params)},
                {"point", a.point},
                {"k", a.k}};
  env.payload = {
      {"model", spec.name},
      {"point", point_json(p)},
      {"k", a.k},
      {"block_max", std::move(bj)},
      {"omega",
       {{"horizontal_positive", om.horizontal_positive},
        {"vertical_positive", om.vertical_positive},
        {"min_horizontal_eig", num(om.min_horizontal_eig)},
        {"min_vertical_eig", num(om.min_vertical_eig)}}},
      {"directions",
       {{"hsc_horizontal", num(hsc_h)},
        {"hsc_vertical", num(hsc_v)},
        {"hsc_mixed", num(hsc_m)},
        {"hbc_horizontal_vertical", num(hbc_hv)}}},
      {"oracle_gap", num(gap)}};

  std::ostringstream hs;
  hs << "analyze: " << spec.name << " at k=" << a.k << "\n"
     << "  omega positive: horizontal=" << (om.horizontal_positive ? "yes" : "no")
     << " vertical=" << (om.vertical_positive ? "yes" : "no") << "\n"
     << "  HSC horizontal " << fmt("%+.6f", hsc_h) << ", vertical "
     << fmt("%+.6f", hsc_v) << ", mixed " << fmt("%+.6f", hsc_m) << "\n"
     << "  HBC (horizontal, vertical) " << fmt("%+.6f", hbc_hv) << "\n"
     << "  oracle gap " << fmt("%.3e", gap) << "\n";
  return sink.emit(std::move(env), "analyze", hs.str());
}

// ---------------------------------------------------------------- certify

struct CertifyArgs {
  std::string model = "sheared_poincare";
  std::vector<std::string> params;
  std::string quantity = "hsc";
  double k_min = 0.25, k_max = 1e4;
  int samples = 4000;
  int points = 3;
  std::uint64_t seed = 2024;
  double tol = 1e-9;
};

certifier::Quantity parse_quantity(const std::string& q) {
  if (q == "hsc") return certifier::Quantity::HSC;
  if (q == "hbc") return certifier::Quantity::HBC;
  throw BadArgument("quantity must be hsc or hbc");
}

int cmd_certify(Sink& sink, const CertifyArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto pts = draw_points(spec, a.points, a.seed);
  const auto q = parse_quantity(a.quantity);
  const auto mode = q == certifier::Quantity::HSC
                        ? certifier::SampleMode::Full
                        : certifier::SampleMode::Pairs;
  const auto sample =
      certifier::sample_directions(spec.m, spec.n, a.samples, a.seed, mode);
  const auto cert =
      certifier::find_threshold(spec, pts, q, a.k_min, a.k_max, sample, a.tol);

  json grid = json::array(), sups = json::array();
  for (double k : cert.k_grid) grid.push_back(k);
  for (double s : cert.sup_per_k) sups.push_back(num(s));

  report::ReportEnvelope env;
  env.command = "certify";
  env.params = {{"model", a.model},     {"param", parse_params(a.params)},
                {"quantity", a.quantity}, {"k_min", a.k_min},
                {"k_max", a.k_max},     {"samples", a.samples},
                {"points", a.points},   {"seed", a.seed},
                {"tol", a.tol}};
  env.seeds = {a.seed};
  env.payload = {{"certificate",
                  {{"model", cert.model},
                   {"params", cert.params},
                   {"points", points_json(cert.points)},
                   {"quantity", certifier::to_string(cert.quantity)},
                   {"k_min", cert.k_min},
                   {"k_max", cert.k_max},
                   {"tol", cert.tol},
                   {"seed", cert.seed},
                   {"sample_count", cert.sample_count},
                   {"sample_mode", certifier::to_string(mode)},
                   {"k_grid", std::move(grid)},
                   {"sup_per_k", std::move(sups)},
                   {"certified", cert.certified},
                   {"k0", cert.certified ? json(cert.k0) : json(nullptr)},
                   {"empirical", cert.empirical}}}};
  env.exit_status = cert.certified ? 0 : 2;

  std::ostringstream hs;
  hs << "certify " << certifier::to_string(cert.quantity) << " < -"
     << fmt("%.1e", cert.tol) << " on " << spec.name << ", window ["
     << cert.k_min << ", " << cert.k_max << "]\n";
  if (cert.certified)
    hs << "  certified (empirically) for k >= " << fmt("%.9g", cert.k0)
       << "\n";
  else
    hs << "  NOT certified on this window\n";
  hs << "  scan: ";
  for (std::size_t i = 0; i < cert.k_grid.size(); ++i)
    hs << fmt("%.3g", cert.k_grid[i]) << ":" << fmt("%.2e", cert.sup_per_k[i])
       << (i + 1 < cert.k_grid.size() ? "  " : "\n");
  return sink.emit(std::move(env), "certificate", hs.str());
}

// ---------------------------------------------------------------- asymptotics

struct AsymArgs {
  std::string model = "sheared_poincare";
  std::vector<std::string> params;
  std::string point;
  std::string kgrid = "geometric:100:1e6:9";
};

json law_json(const certifier::LawFit& f) {
  json devs = json::array();
  for (double d : f.dev) devs.push_back(num(d));
  return {{"dev", std::move(devs)},
          {"target", f.target},
          {"band", f.band},
          {"one_sided", f.one_sided},
          {"exact", f.exact},
          {"fitted", f.fitted},
          {"slope", num(f.slope)},
          {"stderr_slope", num(f.stderr_slope)},
          {"pass", f.pass}};
}

int cmd_asymptotics(Sink& sink, const AsymArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto p = parse_point(a.point, spec);
  const auto ks = parse_kgrid(a.kgrid);
  const auto rep = certifier::asymptotic_check(spec, p, ks);

  json grid = json::array(), valid = json::array();
  for (double k : rep.k_grid) grid.push_back(k);
  for (bool v : rep.valid) valid.push_back(v);

  report::ReportEnvelope env;
  env.command = "asymptotics";
  env.params = {{"model", a.model},
                {"param", parse_params(a.params)},
                {"point", a.point},
                {"k_grid", a.kgrid}};
  env.payload = {{"model", rep.model},
                 {"point", point_json(rep.point)},
                 {"k_grid", std::move(grid)},
                 {"valid", std::move(valid)},
                 {"laws",
                  {{"hh", law_json(rep.hh)},
                   {"vv_fiber", law_json(rep.vv_fiber)},
                   {"vv_frame", law_json(rep.vv_frame)},
                   {"cross", law_json(rep.cross)}}},
                 {"pass", rep.pass()}};

  std::ostringstream csv;
  csv << "k,valid,dev_hh,dev_vv_fiber,dev_vv_frame,dev_cross\n";
  csv << std::setprecision(15);
  for (std::size_t i = 0; i < rep.k_grid.size(); ++i)
    csv << rep.k_grid[i] << ',' << (rep.valid[i] ? 1 : 0) << ','
        << rep.hh.dev[i] << ',' << rep.vv_fiber.dev[i] << ','
        << rep.vv_frame.dev[i] << ',' << rep.cross.dev[i] << '\n';

  auto law_line = [](const char* name, const certifier::LawFit& f) {
    std::ostringstream os;
    os << "  " << (f.pass ? "pass " : "FAIL ") << name << ": ";
    if (f.exact)
      os << "deviations at roundoff";
    else if (f.fitted)
      os << "slope " << fmt("%+.3f", f.slope) << " (target "
         << fmt("%+.1f", f.target) << (f.one_sided ? ", one-sided" : "")
         << ", band " << fmt("%.1f", f.band) << ")";
    else
      os << "not fitted";
    os << "\n";
    return os.str();
  };
  std::ostringstream hs;
  hs << "asymptotics: " << rep.model << " over " << rep.k_grid.size()
     << " k values\n"
     << law_line("hh       ", rep.hh) << law_line("vv_fiber ", rep.vv_fiber)
     << law_line("vv_frame ", rep.vv_frame) << law_line("cross    ", rep.cross);
  return sink.emit(std::move(env), "asymptotics", hs.str(),
                   {{"asymptotics.csv", csv.str()}});
}

// ---------------------------------------------------------------- griffiths

struct GriffArgs {
  std::string model = "sheared_poincare";
  std::vector<std::string> params;
  int samples = 4000;
  int points = 3;
  std::uint64_t seed = 2024;
};

int cmd_griffiths(Sink& sink, const GriffArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto pts = draw_points(spec, a.points, a.seed);
  const auto gb =
      certifier::estimate_griffiths_bounds(spec, pts, a.samples, a.seed);
  const auto hsup =
      certifier::estimate_hsc_sup_base_fiber(spec, pts, a.samples, a.seed);

  report::ReportEnvelope env;
  env.command = "griffiths";
  env.params = {{"model", a.model},
                {"param", parse_params(a.params)},
                {"samples", a.samples},
                {"points", a.points},
                {"seed", a.seed}};
  env.seeds = {a.seed};
  env.payload = {
      {"model", spec.name},
      {"points", points_json(pts)},
      {"griffiths",
       {{"c0", num(gb.c0)},
        {"C0", num(gb.C0)},
        {"c1", num(gb.c1)},
        {"eps_griffiths", num(gb.eps_griffiths)},
        {"griffiths_negative", gb.griffiths_negative},
        {"skipped", gb.skipped},
        {"samples", gb.samples}}},
      {"base_fiber",
       {{"base_sup", num(hsup.base_sup)},
        {"fiber_sup", num(hsup.fiber_sup)},
        {"eps_base", num(hsup.eps_base)},
        {"eps_fiber", num(hsup.eps_fiber)},
        {"base_strict", hsup.base_strict},
        {"fiber_strict", hsup.fiber_strict}}}};

  std::ostringstream hs;
  hs << "griffiths bounds: " << spec.name << ", " << a.samples
     << " samples x " << a.points << " points\n"
     << "  c0=" << fmt("%.6f", gb.c0) << "  C0=" << fmt("%.6f", gb.C0)
     << "  c1=" << fmt("%.6f", gb.c1)
     << "  eps=" << fmt("%.6f", gb.eps_griffiths)
     << (gb.griffiths_negative ? "  (negative)" : "  (not negative)") << "\n"
     << "  base HSC sup " << fmt("%+.6f", hsup.base_sup) << " (eps_base "
     << fmt("%.6f", hsup.eps_base) << (hsup.base_strict ? ", strict" : "")
     << "), fiber HSC sup " << fmt("%+.6f", hsup.fiber_sup) << " (eps_fiber "
     << fmt("%.6f", hsup.eps_fiber) << (hsup.fiber_strict ? ", strict" : "")
     << ")\n";
  if (gb.skipped > 0) hs << "  skipped " << gb.skipped << " samples\n";
  return sink.emit(std::move(env), "griffiths", hs.str());
}

// ---------------------------------------------------------------- ke solve

struct KeSolveArgs {
  double radius = 0.8;
  int grid = 129;
  double tol = 1e-10;
};

int cmd_ke_solve(Sink& sink, const KeSolveArgs& a) {
  const auto sol = ke::solve_liouville(a.radius, a.grid, a.tol);
  int interior = 0;
  for (int iy = 0; iy < sol.N; ++iy)
    for (int ix = 0; ix < sol.N; ++ix) interior += sol.inside(ix, iy);

  json hist = json::array();
  for (double r : sol.residual_history) hist.push_back(num(r));

  report::ReportEnvelope env;
  env.command = "ke solve";
  env.params = {{"radius", a.radius}, {"grid", a.grid}, {"tol", a.tol}};
  env.payload = {{"radius", sol.radius},
                 {"grid", sol.N},
                 {"spacing", sol.spacing},
                 {"interior_nodes", interior},
                 {"boundary_value", sol.boundary_value},
                 {"residual", num(sol.residual)},
                 {"iterations", sol.iterations},
                 {"residual_history", std::move(hist)},
                 {"max_error", num(sol.max_error())}};

  std::ostringstream csv;
  ke::write_csv(sol, csv);

  std::ostringstream hs;
  hs << "Liouville disk solve: radius " << a.radius << ", " << a.grid << "x"
     << a.grid << " grid (" << interior << " interior nodes)\n"
     << "  residual " << fmt("%.3e", sol.residual) << " after "
     << sol.iterations << " Newton steps; max error vs exact "
     << fmt("%.3e", sol.max_error()) << "\n";
  return sink.emit(std::move(env), "liouville", hs.str(),
                   {{"liouville.csv", csv.str()}});
}

// ---------------------------------------------------------------- ke identities

struct KeIdArgs {
  std::string model = "translation_family";
  std::vector<std::string> params;
  int points = 25;
  std::uint64_t seed = 2024;
  double gate = 1e-8;
  int samples = 2000;
};

int cmd_ke_identities(Sink& sink, const KeIdArgs& a) {
  const auto spec = models::instantiate(a.model, parse_params(a.params));
  const auto pts = draw_points(spec, a.points, a.seed);

  double det_max = 0.0, det_rel = 0.0;
  int det_ok = 0;
  double trace_checked = 0.0, trace_any = 0.0;
  int gated_off = 0;
  for (const auto& p : pts) {
    const auto fj = fibration::make_jet(spec, p);
    const auto det = ke::verify_ke_det_identity(fj);
    det_max = std::max(det_max, det.residual);
    det_rel = std::max(det_rel, det.relative);
    det_ok += det.ok;
    const auto tr = ke::trace_identity_check(fj, a.gate);
    trace_any = std::max(trace_any, tr.max_residual);
    if (tr.precondition_ok)
      trace_checked = std::max(trace_checked, tr.max_residual);
    else
      ++gated_off;
  }

  json corollary = nullptr;
  std::string cor_line;
  if (spec.n == 1) {
    const auto cr = ke::corollary_1d_check(spec, pts, a.samples, a.seed);
    corollary = {{"verdict", cr.verdict == hermitian::Verdict::NEGATIVE
                                 ? "negative"
                                 : "indefinite"},
                 {"sup", num(cr.sup)},
                 {"samples", cr.samples},
                 {"skipped", cr.skipped},
                 {"seed", cr.seed}};
    cor_line = std::string("  corollary (n=1): ") +
               (cr.verdict == hermitian::Verdict::NEGATIVE ? "NEGATIVE"
                                                           : "INDEFINITE") +
               ", sup " + fmt("%+.6e", cr.sup) + "\n";
  }

  report::ReportEnvelope env;
  env.command = "ke identities";
  env.params = {{"model", a.model},   {"param", parse_params(a.params)},
                {"points", a.points}, {"seed", a.seed},
                {"gate", a.gate},     {"samples", a.samples}};
  env.seeds = {a.seed};
  env.payload = {
      {"model", spec.name},
      {"det",
       {{"max_residual", num(det_max)},
        {"max_relative", num(det_rel)},
        {"ok_count", det_ok},
        {"points", a.points}}},
      {"trace",
       {{"max_residual_checked", gated_off == a.points ? json(nullptr)
                                                       : json(trace_checked)},
        {"max_residual_any", num(trace_any)},
        {"gated_off", gated_off}}},
      {"corollary", std::move(corollary)}};

  std::ostringstream hs;
  hs << "ke identities: " << spec.name << ", " << a.points << " points\n"
     << "  det residual max " << fmt("%.3e", det_max) << " (" << det_ok << "/"
     << a.points << " within tolerance)\n";
  if (gated_off == a.points)
    hs << "  trace identity: precondition failed at every point (det "
          "residual above gate "
       << fmt("%.1e", a.gate) << "); diagnostic residual "
       << fmt("%.3e", trace_any) << "\n";
  else
    hs << "  trace residual max " << fmt("%.3e", trace_checked) << " ("
       << gated_off << " points gated off)\n";
  hs << cor_line;
  return sink.emit(std::move(env), "ke_identities", hs.str());
}

// ---------------------------------------------------------------- plumbing

CLI::Option* last_wins(CLI::Option* o) {
  return o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

// Config file values become extra "--key=value" tokens spliced in right
// after the subcommand chain, so explicit flags (parsed later, TakeLast)
// override them.  Keys the invoked command does not define are ignored: one
// config may serve several subcommands.
std::vector<std::string> apply_config(std::vector<std::string> args,
                                      CLI::App& app) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream f(path);
  if (!f) throw BadArgument("config: cannot open " + path);
  json cfg;
  try {
    f >> cfg;
  } catch (const json::parse_error& e) {
    throw BadArgument(std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) throw BadArgument("config: expected a JSON object");

  // walk to the deepest subcommand, skipping options and their values;
  // config flags are spliced in right after it
  CLI::App* scope = &app;
  std::size_t chain_end = 0;
  for (std::size_t i = 0; i < args.size();) {
    const std::string& t = args[i];
    if (!t.empty() && t[0] == '-') {
      const std::string name = t.substr(0, t.find('='));
      const CLI::Option* o = nullptr;
      for (CLI::App* s = scope; s != nullptr && o == nullptr;
           s = s->get_parent())
        o = s->get_option_no_throw(name);
      if (o != nullptr && t.find('=') == std::string::npos &&
          o->get_expected_min() > 0)
        ++i;  // the option consumes the next token
      ++i;
      continue;
    }
    CLI::App* next = nullptr;
    try {
      next = scope->get_subcommand(t);
    } catch (const CLI::Error&) {
      break;
    }
    scope = next;
    chain_end = ++i;
  }

  std::vector<std::string> extra;
  for (const auto& [key, val] : cfg.items()) {
    const CLI::Option* opt = nullptr;
    for (CLI::App* s = scope; s != nullptr && opt == nullptr;
         s = s->get_parent())
      opt = s->get_option_no_throw("--" + key);
    if (opt == nullptr) continue;
    extra.push_back("--" + key + "=" +
                    (val.is_string() ? val.get<std::string>() : val.dump()));
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(chain_end),
              extra.begin(), extra.end());
  return args;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  Sink sink(out, err);
  std::string config_path;

  CLI::App app{"Curvature toolkit for relative Kaehler fibration charts"};
  app.fallthrough();
  app.require_subcommand(1);
  last_wins(app.add_option("--out", sink.out_dir,
                           "directory for report files (JSON + CSV)"));
  app.add_flag("--json", sink.json_out,
               "print the full report envelope instead of a summary");
  last_wins(app.add_option("--config", config_path,
                           "JSON file presetting any flag of the invoked "
                           "command (explicit flags win)"));

  int code = 0;

  auto* models_cmd = app.add_subcommand("models", "model catalog");
  models_cmd->require_subcommand(1);
  auto* models_list =
      models_cmd->add_subcommand("list", "list builtin chart models");
  models_list->callback([&] { code = cmd_models(sink); });

  auto* verify_cmd = app.add_subcommand("verify", "internal consistency suites");
  verify_cmd->require_subcommand(1);
  VerifyArgs va;
  auto* verify_id = verify_cmd->add_subcommand(
      "identities", "oracle equivalence, decomposition, reality, frame "
                    "invariance at random points");
  last_wins(verify_id->add_option("--model", va.model, "catalog model name"));
  verify_id->add_option("--param", va.params, "model parameter NAME=VALUE");
  last_wins(verify_id->add_option("--points", va.points, "random chart points"));
  last_wins(verify_id->add_option("--seed", va.seed, "rng seed"));
  last_wins(verify_id->add_option("--tol", va.tol, "residual tolerance"));
  verify_id->callback([&] { code = cmd_verify(sink, va); });

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand(
      "analyze", "curvature blocks and named directions at one point");
  last_wins(analyze->add_option("--model", aa.model, "catalog model name"));
  analyze->add_option("--param", aa.params, "model parameter NAME=VALUE");
  last_wins(analyze->add_option(
      "--point", aa.point, "chart point \"z.. ; v..\", entries (re,im)"));
  last_wins(analyze->add_option("--k", aa.k, "horizontal scale k"));
  analyze->callback([&] { code = cmd_analyze(sink, aa); });

  CertifyArgs ca;
  auto* certify = app.add_subcommand(
      "certify", "search the smallest k with negative sampled curvature");
  last_wins(certify->add_option("--model", ca.model, "catalog model name"));
  certify->add_option("--param", ca.params, "model parameter NAME=VALUE");
  last_wins(certify->add_option("--quantity", ca.quantity, "hsc or hbc"));
  last_wins(certify->add_option("--k-min", ca.k_min, "window start"));
  last_wins(certify->add_option("--k-max", ca.k_max, "window end"));
  last_wins(certify->add_option("--samples", ca.samples, "directions per point"));
  last_wins(certify->add_option("--points", ca.points, "random chart points"));
  last_wins(certify->add_option("--seed", ca.seed, "rng seed"));
  last_wins(certify->add_option("--tol", ca.tol, "negativity margin"));
  certify->callback([&] { code = cmd_certify(sink, ca); });

  AsymArgs sa;
  auto* asym = app.add_subcommand(
      "asymptotics", "large-k deviation laws of the curvature blocks");
  last_wins(asym->add_option("--model", sa.model, "catalog model name"));
  asym->add_option("--param", sa.params, "model parameter NAME=VALUE");
  last_wins(asym->add_option("--point", sa.point,
                             "chart point \"z.. ; v..\", entries (re,im)"));
  last_wins(asym->add_option("--k-grid", sa.kgrid,
                             "geometric:A:B:COUNT or comma list"));
  asym->callback([&] { code = cmd_asymptotics(sink, sa); });

  GriffArgs ga;
  auto* griff = app.add_subcommand(
      "griffiths", "vertical-bundle curvature bounds c0, C0, c1");
  last_wins(griff->add_option("--model", ga.model, "catalog model name"));
  griff->add_option("--param", ga.params, "model parameter NAME=VALUE");
  last_wins(griff->add_option("--samples", ga.samples, "directions per point"));
  last_wins(griff->add_option("--points", ga.points, "random chart points"));
  last_wins(griff->add_option("--seed", ga.seed, "rng seed"));
  griff->callback([&] { code = cmd_griffiths(sink, ga); });

  auto* ke_cmd = app.add_subcommand("ke", "fiberwise Kaehler-Einstein tools");
  ke_cmd->require_subcommand(1);
  KeSolveArgs ka;
  auto* ke_solve = ke_cmd->add_subcommand(
      "solve", "Liouville equation on a disk (Newton, shaved-arm stencil)");
  last_wins(ke_solve->add_option("--radius", ka.radius, "disk radius in (0,1)"));
  last_wins(ke_solve->add_option("--grid", ka.grid, "nodes per axis (>= 17)"));
  last_wins(ke_solve->add_option("--tol", ka.tol, "scaled residual target"));
  ke_solve->callback([&] { code = cmd_ke_solve(sink, ka); });

  KeIdArgs ki;
  auto* ke_id = ke_cmd->add_subcommand(
      "identities", "determinant and trace identities, 1-d corollary");
  last_wins(ke_id->add_option("--model", ki.model, "catalog model name"));
  ke_id->add_option("--param", ki.params, "model parameter NAME=VALUE");
  last_wins(ke_id->add_option("--points", ki.points, "random chart points"));
  last_wins(ke_id->add_option("--seed", ki.seed, "rng seed"));
  last_wins(ke_id->add_option("--gate", ki.gate,
                              "det-residual gate for the trace identity"));
  last_wins(ke_id->add_option("--samples", ki.samples,
                              "corollary direction samples"));
  ke_id->callback([&] { code = cmd_ke_identities(sink, ki); });

  try {
    auto expanded = apply_config(args, app);
    std::vector<const char*> argv;
    argv.reserve(expanded.size() + 1);
    argv.push_back("kurv");
    for (const auto& s : expanded) argv.push_back(s.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n(run with --help for usage)\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

int run_command(const std::vector<std::string>& args) {
  return run_command(args, std::cout, std::cerr);
}

}  // namespace kurv::cli
