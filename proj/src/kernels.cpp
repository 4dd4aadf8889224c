#include "mskp/kernels.hpp"

#include "mskp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mskp {

void KernelHyper::validate() const {
  if (!(variance > 0.0) || !(lengthscale > 0.0) || !(period > 0.0) || !std::isfinite(offset)) {
    throw std::invalid_argument("kernel hyperparameters need variance, lengthscale, period > 0");
  }
}

void KernelSpec::validate() const {
  if (factors.empty() || factors.size() > 2) throw std::invalid_argument("kernel spec needs one or two factors");
  hyper.validate();
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "l";
    case KernelKind::gaussian: return "g";
    case KernelKind::periodic: return "p";
  }
  return "?";
}

KernelKind parse_kernel_kind(char c) {
  switch (c) {
    case 'l': return KernelKind::linear;
    case 'g': return KernelKind::gaussian;
    case 'p': return KernelKind::periodic;
    default: throw std::invalid_argument(std::string("unknown kernel kind '") + c + "'");
  }
}

std::string KernelSpec::name() const {
  std::string out = "k_";
  for (auto k : factors) out += to_string(k);
  return out;
}

namespace {

KernelGradient basic_with_gradient(KernelKind kind, const KernelHyper& h, double x, double xp) {
  KernelGradient g;
  const double r = x - xp;
  const double l2 = h.lengthscale * h.lengthscale;
  switch (kind) {
    case KernelKind::linear:
      g.value = h.variance * (x - h.offset) * (xp - h.offset);
      g.d_offset = -h.variance * ((xp - h.offset) + (x - h.offset));
      break;
    case KernelKind::gaussian:
      g.value = h.variance * std::exp(-r * r / (2.0 * l2));
      g.d_log_lengthscale = g.value * r * r / l2;
      break;
    case KernelKind::periodic: {
      const double u = std::numbers::pi * r / h.period;
      const double s = std::sin(u);
      g.value = h.variance * std::exp(-(2.0 / l2) * s * s);
      g.d_log_lengthscale = g.value * (4.0 / l2) * s * s;
      g.d_log_period = g.value * (2.0 / l2) * u * std::sin(2.0 * u);
      break;
    }
  }
  return g;
}

}  // namespace

double basic_kernel(KernelKind kind, const KernelHyper& h, double x, double xp) {
  return basic_with_gradient(kind, h, x, xp).value;
}

KernelGradient kernel_eval_with_gradient(const KernelSpec& spec, double x, double xp) {
  KernelGradient out = basic_with_gradient(spec.factors.front(), spec.hyper, x, xp);
  for (std::size_t i = 1; i < spec.factors.size(); ++i) {
    const KernelGradient f = basic_with_gradient(spec.factors[i], spec.hyper, x, xp);
    out.d_log_lengthscale = out.d_log_lengthscale * f.value + out.value * f.d_log_lengthscale;
    out.d_log_period = out.d_log_period * f.value + out.value * f.d_log_period;
    out.d_offset = out.d_offset * f.value + out.value * f.d_offset;
    out.value *= f.value;
  }
  return out;
}

double kernel_eval(const KernelSpec& spec, double x, double xp) {
  double v = 1.0;
  for (auto k : spec.factors) v *= basic_kernel(k, spec.hyper, x, xp);
  return v;
}

Matrix gram(const KernelSpec& spec, const Vector& x, const Vector& y) {
  Matrix out(x.size(), y.size());
  for (Index j = 0; j < y.size(); ++j) {
    for (Index i = 0; i < x.size(); ++i) out(i, j) = kernel_eval(spec, x[i], y[j]);
  }
  return out;
}

KernelSpec KernelLibrary::element(Index i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("kernel library index out of range");
  return KernelSpec{elements[static_cast<std::size_t>(i)], hyper};
}

bool KernelLibrary::uses(KernelKind kind) const {
  return std::any_of(elements.begin(), elements.end(), [kind](const auto& e) {
    return std::find(e.begin(), e.end(), kind) != e.end();
  });
}

std::vector<std::string> KernelLibrary::names() const {
  std::vector<std::string> out;
  for (Index i = 0; i < size(); ++i) out.push_back(element(i).name());
  return out;
}

void KernelLibrary::validate() const {
  if (elements.empty()) throw std::invalid_argument("kernel library is empty");
  for (Index i = 0; i < size(); ++i) element(i).validate();
}

KernelLibrary KernelLibrary::full() {
  using K = KernelKind;
  return {{{K::linear}, {K::gaussian}, {K::periodic}, {K::linear, K::linear}, {K::linear, K::gaussian},
           {K::linear, K::periodic}, {K::gaussian, K::periodic}},
          {}};
}

KernelLibrary KernelLibrary::pde() {
  using K = KernelKind;
  return {{{K::gaussian}, {K::periodic}, {K::gaussian, K::periodic}}, {}};
}

KernelLibrary KernelLibrary::sylvester() {
  using K = KernelKind;
  return {{{K::gaussian}, {K::linear}, {K::gaussian, K::linear}}, {}};
}

KernelLibrary KernelLibrary::parse(const std::string& text) {
  if (text == "full") return full();
  if (text == "pde") return pde();
  if (text == "sylvester") return sylvester();
  KernelLibrary lib;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.rfind("k_", 0) == 0) item = item.substr(2);
    if (item.empty() || item.size() > 2) throw std::invalid_argument("bad kernel element '" + item + "'");
    std::vector<KernelKind> e;
    for (char c : item) e.push_back(parse_kernel_kind(c));
    lib.elements.push_back(std::move(e));
  }
  lib.validate();
  return lib;
}

}  // namespace mskp
