// SPDX-License-Identifier: Apache-2.0
#include "numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gremetl::num {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry &e) { return e.passed; });
}

double GradCheckReport::worst_relative_error() const {
  double w = 0.0;
  for (const auto &e : entries)
    if (!e.zero_gradient)
      w = std::max(w, e.relative_error);
  return w;
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << "grad_check tol=" << tolerance << (passed() ? " PASS" : " FAIL") << "\n";
  for (const auto &e : entries)
    os << "  " << (e.passed ? "ok   " : "FAIL ") << e.name
       << " rel=" << e.relative_error << " abs=" << e.max_abs_error
       << (e.zero_gradient ? " zero" : "") << "\n";
  return os.str();
}

GradCheckReport grad_check(Graph &graph, ParamStore &store,
                           const Inputs &inputs, NodeId output,
                           double tolerance, double step) {
  const double f0 = graph.forward_eval(inputs, output).item();
  const Gradients analytic = graph.backward(output);
  const double noise = 100.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(f0)) / step;

  GradCheckReport report;
  report.tolerance = tolerance;
  for (ParamId p = 0; p < store.size(); ++p) {
    Tensor &value = store.value(p);
    std::vector<double> numeric(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value[i];
      value[i] = orig + step;
      const double up = graph.forward_eval(inputs, output).item();
      value[i] = orig - step;
      const double down = graph.forward_eval(inputs, output).item();
      value[i] = orig;
      numeric[i] = (up - down) / (2.0 * step);
    }
    GradCheckEntry e;
    e.param = p;
    e.name = store.name(p);
    double diff2 = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const double d = analytic[p][i] - numeric[i];
      diff2 += d * d;
      e.max_abs_error = std::max(e.max_abs_error, std::abs(d));
    }
    e.relative_error =
      std::sqrt(diff2) / std::max(1e-12, l2_norm(numeric));
    const double floor = noise * std::sqrt(static_cast<double>(numeric.size()));
    e.zero_gradient = l2_norm(analytic[p].values()) <= floor && l2_norm(numeric) <= floor;
    e.passed = e.relative_error < tolerance || e.zero_gradient;
    report.entries.push_back(std::move(e));
  }
  // Leave the graph holding values for the unperturbed parameters.
  graph.forward_eval(inputs, output);
  return report;
}

} // namespace gremetl::num
