#include "topo/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "topo/errors.hpp"

namespace topo {

void OCParams::validate() const {
  if (!(volfrac > 0.0 && volfrac <= 1.0)) throw InvalidArgument(fmt::format("volfrac {} outside (0, 1]", volfrac));
  if (!(penal >= 1.0)) throw InvalidArgument(fmt::format("penal {} must be >= 1", penal));
  if (!(move > 0.0 && move < 1.0)) throw InvalidArgument(fmt::format("move {} outside (0, 1)", move));
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument(fmt::format("damping {} outside (0, 1]", damping));
  if (!(d_min > 0.0 && d_min < volfrac))
    throw InvalidArgument(fmt::format("d_min {} must lie in (0, volfrac)", d_min));
  if (!(bisect_lo < bisect_hi) || bisect_lo < 0.0)
    throw InvalidArgument("multiplier bracket needs 0 <= bisect_lo < bisect_hi");
  if (!(bisect_tol > 0.0)) throw InvalidArgument("bisect_tol must be positive");
}

void PassiveSet::validate(std::size_t num_cells, double d_min) const {
  if (cells.size() != values.size()) throw InvalidArgument("passive set needs one value per cell");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] < 0 || static_cast<std::size_t>(cells[i]) >= num_cells)
      throw InvalidArgument(fmt::format("passive cell {} out of range", cells[i]));
    if (!(values[i] >= d_min && values[i] <= 1.0))
      throw InvalidArgument(fmt::format("passive value {} outside [{}, 1]", values[i], d_min));
  }
}

void PassiveSet::apply(std::span<double> density) const {
  for (std::size_t i = 0; i < cells.size(); ++i) density[cells[i]] = values[i];
}

SensitivityResult compute_sensitivities(std::span<const double> density, double penal,
                                        std::span<const double> energies) {
  if (density.size() != energies.size()) throw InvalidArgument("density and energy sizes differ");
  SensitivityResult out;
  out.sensitivity.resize(density.size());
  for (std::size_t e = 0; e < density.size(); ++e) {
    out.objective += std::pow(density[e], penal) * energies[e];
    out.sensitivity[e] = -penal * std::pow(density[e], penal - 1.0) * energies[e];
  }
  return out;
}

std::vector<double> volume_gradient(const Mesh& mesh, bool count_volume) {
  if (count_volume) return std::vector<double>(mesh.num_cells(), 1.0);
  return mesh.cell_volumes();
}

double volume_fraction(std::span<const double> density, std::span<const double> volumes) {
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < density.size(); ++e) {
    num += volumes[e] * density[e];
    den += volumes[e];
  }
  return num / den;
}

namespace {

struct OcTrial {
  std::span<const double> density;
  std::span<const double> sensitivity;
  std::span<const double> volumes;
  const OCParams& params;
  const PassiveSet& passive;

  // Candidate densities at multiplier lambda; returns sum V_e d_e - k sum V_e.
  double operator()(double lambda, std::vector<double>& out) const {
    const std::size_t n = density.size();
    out.resize(n);
    const bool sqrt_damping = params.damping == 0.5;
    for (std::size_t e = 0; e < n; ++e) {
      const double d = density[e];
      const double B = std::max(0.0, -sensitivity[e]) / (lambda * volumes[e]);
      const double candidate = d * (sqrt_damping ? std::sqrt(B) : std::pow(B, params.damping));
      const double lo = std::max(params.d_min, d - params.move);
      const double hi = std::min(1.0, d + params.move);
      out[e] = std::clamp(candidate, lo, hi);
    }
    passive.apply(out);
    double excess = 0.0, total = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      excess += volumes[e] * out[e];
      total += volumes[e];
    }
    return excess - params.volfrac * total;
  }
};

}  // namespace

OcResult oc_update(std::span<const double> density, std::span<const double> sensitivity,
                   std::span<const double> volumes, const OCParams& params, const PassiveSet& passive) {
  params.validate();
  const std::size_t n = density.size();
  if (sensitivity.size() != n || volumes.size() != n)
    throw InvalidArgument("density, sensitivity and volume sizes differ");

  const OcTrial trial{density, sensitivity, volumes, params, passive};
  std::vector<double> trial_density;
  if (trial(params.bisect_hi, trial_density) > 0.0)
    throw BracketExhausted(fmt::format(
        "volume exceeds the target even at multiplier {}; increase the upper bracket", params.bisect_hi));

  OcResult result;
  double l1 = params.bisect_lo, l2 = params.bisect_hi;
  while (l2 - l1 > params.bisect_tol) {
    const double mid = 0.5 * (l1 + l2);
    if (trial(mid, trial_density) > 0.0)
      l1 = mid;
    else
      l2 = mid;
    ++result.bisection_steps;
  }
  result.multiplier = 0.5 * (l1 + l2);
  trial(result.multiplier, result.density);
  return result;
}

StructuralAnalysis::StructuralAnalysis(const Model& model, const Material& material,
                                       const SolverConfig& solver)
    : model_(&model),
      material_(material),
      assembler_(model.mesh, material),
      constraints_(collect_constraints(model.mesh, model.supports)),
      solver_(solver) {
  for (const auto& load : model.loads) loads_.push_back(assemble_load(model.mesh, load));
}

Evaluation StructuralAnalysis::evaluate(std::span<const double> density, double penal) {
  const Mesh& mesh = model_->mesh;
  K_ = assembler_.assemble(density, penal);
  std::vector<std::vector<double>> rhs = loads_;
  apply_constraints(K_, rhs, constraints_);

  Evaluation ev;
  ev.sensitivity.assign(mesh.num_cells(), 0.0);
  previous_.resize(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    std::vector<double> u = i == 0 ? solver_.solve(K_, rhs[i], previous_[i])
                                   : solver_.resolve(K_, rhs[i], previous_[i]);
    const auto energies = element_strain_energies(mesh, u, material_);
    const auto sens = compute_sensitivities(density, penal, energies);
    ev.load_objectives.push_back(sens.objective);
    ev.objective += sens.objective;
    for (std::size_t e = 0; e < sens.sensitivity.size(); ++e) ev.sensitivity[e] += sens.sensitivity[e];
    previous_[i] = u;
    ev.displacements.push_back(std::move(u));
  }
  return ev;
}

void RunOptions::validate() const {
  params.validate();
  material.validate();
  solver.validate();
  if (filter != FilterKind::None && !(rmin > 0.0)) throw InvalidArgument("rmin must be positive");
  if (chunk_rows < 1) throw InvalidArgument("chunk_rows must be >= 1");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(change_tol > 0.0)) throw InvalidArgument("change_tol must be positive");
}

std::vector<double> initial_density(const Model& model, const OCParams& params) {
  const auto volumes = volume_gradient(model.mesh, params.count_volume);
  std::vector<char> pinned(volumes.size(), 0);
  double total = 0.0, fixed = 0.0, free_volume = 0.0;
  for (double v : volumes) total += v;
  for (std::size_t i = 0; i < model.passive.cells.size(); ++i) {
    const auto c = static_cast<std::size_t>(model.passive.cells[i]);
    if (pinned[c]) continue;
    pinned[c] = 1;
    fixed += volumes[c] * model.passive.values[i];
  }
  for (std::size_t c = 0; c < volumes.size(); ++c)
    if (!pinned[c]) free_volume += volumes[c];

  double start = params.volfrac;
  if (!model.passive.empty() && free_volume > 0.0) start = (params.volfrac * total - fixed) / free_volume;
  if (!(start >= params.d_min && start <= 1.0))
    throw InvalidArgument(fmt::format(
        "volfrac {} is infeasible with the passive regions (free cells would need density {})",
        params.volfrac, start));
  std::vector<double> d(volumes.size(), start);
  model.passive.apply(d);
  return d;
}

OptimizationState run_optimization(const Model& model, const RunOptions& options) {
  options.validate();
  const OCParams& params = options.params;
  const Mesh& mesh = model.mesh;
  if (model.loads.empty()) throw InvalidArgument("model has no load case");
  model.passive.validate(mesh.num_cells(), params.d_min);

  OptimizationState state;
  state.density = DensityField{initial_density(model, params), params.d_min};
  const auto volumes = volume_gradient(mesh, params.count_volume);

  // Filters are built once, before the loop.
  std::optional<FilterOperator> distance;
  std::unique_ptr<HelmholtzFilter> helmholtz;
  if (options.filter == FilterKind::Distance)
    distance = build_distance_filter(mesh.cell_midpoints(), options.rmin, options.chunk_rows);
  else if (options.filter == FilterKind::Helmholtz)
    helmholtz = std::make_unique<HelmholtzFilter>(mesh, helmholtz_length(options.rmin), options.solver);

  StructuralAnalysis analysis(model, options.material, options.solver);
  auto& d = state.density.values;

  for (int it = 1; it <= options.max_iters; ++it) {
    const Evaluation ev = analysis.evaluate(d, params.penal);
    if (!std::isfinite(ev.objective))
      throw Divergence(fmt::format("non-finite objective at iteration {}", it));

    std::vector<double> sensitivity;
    if (distance) {
      sensitivity = apply_sensitivity_filter(*distance, d, ev.sensitivity);
    } else if (helmholtz) {
      std::vector<double> weighted(d.size());
      for (std::size_t e = 0; e < d.size(); ++e) weighted[e] = d[e] * ev.sensitivity[e];
      sensitivity = helmholtz->apply(weighted);
      for (std::size_t e = 0; e < d.size(); ++e) sensitivity[e] /= d[e];
    } else {
      sensitivity = ev.sensitivity;
    }

    OcResult upd = oc_update(d, sensitivity, volumes, params, model.passive);
    double change = 0.0;
    for (std::size_t e = 0; e < d.size(); ++e) change = std::max(change, std::abs(upd.density[e] - d[e]));
    d = std::move(upd.density);

    state.iteration = it;
    state.objective = ev.objective;
    state.change = change;
    state.history.push_back({it, ev.objective, volume_fraction(d, volumes), change});
    if (options.observer) options.observer(state);
    if (change < options.change_tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace topo
