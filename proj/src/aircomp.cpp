#include "isea/aircomp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "isea/errors.hpp"
#include "isea/export.hpp"
#include "isea/random.hpp"

namespace isea {

namespace {

void require_shapes(const ChannelRealization& channel, const TransceiverDesign& design) {
  if (design.tx.rows() != channel.gains.rows() || design.tx.cols() != channel.gains.cols() ||
      design.rx.size() != channel.gains.cols()) {
    throw ValidationError("design shape does not match the channel (" +
                          std::to_string(channel.gains.rows()) + " x " +
                          std::to_string(channel.gains.cols()) + ")");
  }
}

void require_sigma(const ChannelRealization& channel, const Matrix& sigma_hat) {
  if (sigma_hat.rows() != channel.gains.rows() || sigma_hat.cols() != channel.gains.cols()) {
    throw ValidationError("estimation-variance matrix does not match the channel shape");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s) {
  const double v = parse_double(s);
  if (v < 0.0 || v != std::floor(v)) throw ValidationError("not an index: '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
  if (name == "tdm" || name == "TDM") return Scheme::kTdm;
  if (name == "fdm" || name == "FDM") return Scheme::kFdm;
  throw ValidationError("unknown scheme '" + std::string(name) + "' (expected tdm or fdm)");
}

std::string_view scheme_name(Scheme scheme) noexcept {
  return scheme == Scheme::kTdm ? "tdm" : "fdm";
}

void validate(const ChannelRealization& channel) {
  if (channel.gains.empty()) throw ValidationError("channel has no gains");
  for (double g : channel.gains.data()) {
    if (!std::isfinite(g) || g < 0.0) {
      throw ValidationError("channel gains must be finite and nonnegative");
    }
  }
  if (!std::isfinite(channel.noise_var) || channel.noise_var < 0.0) {
    throw ValidationError("noise variance must be finite and nonnegative");
  }
  if (channel.scheme == Scheme::kTdm) {
    for (std::size_t k = 0; k < channel.gains.rows(); ++k) {
      for (std::size_t n = 1; n < channel.gains.cols(); ++n) {
        if (std::abs(channel.gains(k, n) - channel.gains(k, 0)) > 1e-12) {
          throw ValidationError("TDM channel must be constant across slots");
        }
      }
    }
  }
}

Vector AggregatedFeature::decoded(std::size_t num_devices) const {
  Vector out = y_hat;
  for (double& v : out) v /= static_cast<double>(num_devices);
  return out;
}

Vector device_power(const TransceiverDesign& design, const Matrix& second_moments) {
  if (second_moments.rows() != design.tx.rows() || second_moments.cols() != design.tx.cols()) {
    throw ValidationError("second-moment matrix does not match the design shape");
  }
  Vector power(design.tx.rows(), 0.0);
  for (std::size_t k = 0; k < design.tx.rows(); ++k) {
    for (std::size_t n = 0; n < design.tx.cols(); ++n) {
      const double p = design.tx(k, n) * design.tx(k, n) * second_moments(k, n);
      if (design.scheme == Scheme::kTdm) {
        power[k] = std::max(power[k], p);
      } else {
        power[k] += p;
      }
    }
  }
  return power;
}

void check_power(const TransceiverDesign& design, std::span<const DeviceProfile> profiles) {
  if (profiles.size() != design.tx.rows()) {
    throw ValidationError("design has " + std::to_string(design.tx.rows()) + " devices, got " +
                          std::to_string(profiles.size()) + " profiles");
  }
  Matrix moments(design.tx.rows(), design.tx.cols());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    if (profiles[k].feature_second_moments.size() != design.tx.cols()) {
      throw ValidationError("device " + std::to_string(k) + " has " +
                            std::to_string(profiles[k].feature_second_moments.size()) +
                            " second moments, design has " + std::to_string(design.tx.cols()) +
                            " columns");
    }
    for (std::size_t n = 0; n < design.tx.cols(); ++n) {
      moments(k, n) = profiles[k].feature_second_moments[n];
    }
  }
  const Vector power = device_power(design, moments);
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double budget = profiles[k].power_budget;
    if (!(power[k] <= budget * (1.0 + kPowerSlack))) {
      throw InfeasibleDesign(k, "device " + std::to_string(k) + " transmits " +
                                    format_number(power[k], 9) + " over its budget " +
                                    format_number(budget, 9));
    }
  }
}

Vector ideal_average(std::span<const EstimatedFeature> estimates) {
  if (estimates.empty()) throw ValidationError("need at least one estimate");
  const std::size_t dim = estimates.front().x_hat.size();
  Vector out(dim, 0.0);
  for (const auto& e : estimates) {
    if (e.x_hat.size() != dim) throw ValidationError("estimates have different dimensions");
    for (std::size_t m = 0; m < dim; ++m) out[m] += e.x_hat[m];
  }
  for (double& v : out) v /= static_cast<double>(estimates.size());
  return out;
}

AggregatedFeature transmit_aggregate(std::span<const EstimatedFeature> estimates,
                                     std::span<const DeviceProfile> profiles,
                                     const ChannelRealization& channel,
                                     const TransceiverDesign& design, std::uint64_t seed) {
  validate(channel);
  require_shapes(channel, design);
  if (estimates.size() != channel.gains.rows()) {
    throw ValidationError("got " + std::to_string(estimates.size()) + " estimates for " +
                          std::to_string(channel.gains.rows()) + " devices");
  }
  check_power(design, profiles);
  AggregatedFeature out;
  out.y_ideal = ideal_average(estimates);
  const std::size_t dim = out.y_ideal.size();
  if (dim > channel.gains.cols()) {
    throw ValidationError("feature dimension exceeds the number of slots/subcarriers");
  }
  StreamRng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(channel.noise_var));
  out.y_hat.assign(dim, 0.0);
  for (std::size_t m = 0; m < dim; ++m) {
    double sum = 0.0;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
      sum += channel.gains(k, m) * design.tx(k, m) * estimates[k].x_hat[m];
    }
    const double noise = channel.noise_var > 0.0 ? normal(rng) : 0.0;
    out.y_hat[m] = design.rx[m] * (sum + noise);
  }
  return out;
}

Vector analytic_mse(const ChannelRealization& channel, const TransceiverDesign& design,
                    const Matrix& sigma_hat) {
  require_shapes(channel, design);
  require_sigma(channel, sigma_hat);
  Vector out(channel.gains.cols(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double a = design.rx[n];
    double acc = a * a * channel.noise_var;
    for (std::size_t k = 0; k < channel.gains.rows(); ++k) {
      const double gap = a * channel.gains(k, n) * design.tx(k, n) - 1.0;
      acc += gap * gap * sigma_hat(k, n);
    }
    out[n] = acc;
  }
  return out;
}

Vector received_md(const ChannelRealization& channel, const TransceiverDesign& design,
                   const Matrix& sigma_hat, std::span<const double> delta) {
  require_shapes(channel, design);
  require_sigma(channel, sigma_hat);
  if (delta.size() != channel.gains.cols()) {
    throw ValidationError("discriminative prior length does not match the number of columns");
  }
  Vector out(channel.gains.cols(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double amplitude = 0.0;
    double noise = channel.noise_var;
    for (std::size_t k = 0; k < channel.gains.rows(); ++k) {
      const double c = channel.gains(k, n) * design.tx(k, n);
      amplitude += c;
      noise += c * c * sigma_hat(k, n);
    }
    out[n] = (amplitude == 0.0 || delta[n] == 0.0) ? 0.0 : amplitude * amplitude * delta[n] / noise;
  }
  return out;
}

double markov_bound(const ProxyBound& bound, double total_mse) {
  if (!(bound.margin > 0.0)) throw ValidationError("classification margin must be positive");
  if (!(bound.a0 >= 0.0 && bound.a0 <= 1.0)) throw ValidationError("A0 must lie in [0, 1]");
  if (!(total_mse >= 0.0)) throw ValidationError("total MSE must be nonnegative");
  return bound.a0 * std::max(0.0, 1.0 - total_mse / (bound.margin * bound.margin));
}

ChannelRealization sample_channel(std::size_t num_devices, std::size_t num_columns, Scheme scheme,
                                  const ChannelParams& params, double noise_var,
                                  std::uint64_t seed) {
  if (num_devices == 0 || num_columns == 0) {
    throw ValidationError("channel needs at least one device and one column");
  }
  if (!(params.scale > 0.0)) throw ValidationError("channel scale must be positive");
  StreamRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    const double re = normal(rng);
    const double im = normal(rng);
    return std::sqrt(0.5 * params.scale * (re * re + im * im));
  };
  ChannelRealization channel{Matrix(num_devices, num_columns), noise_var, scheme};
  for (std::size_t k = 0; k < num_devices; ++k) {
    if (scheme == Scheme::kTdm) {
      const double g = draw();
      for (std::size_t n = 0; n < num_columns; ++n) channel.gains(k, n) = g;
    } else {
      for (std::size_t n = 0; n < num_columns; ++n) channel.gains(k, n) = draw();
    }
  }
  validate(channel);
  return channel;
}

double comm_snr(const DeviceProfile& profile, const ChannelRealization& channel) {
  return 10.0 * std::log10(profile.power_budget / channel.noise_var);
}

void write_channel_csv(std::ostream& out, const ChannelRealization& channel) {
  out << "k,n,gain\n";
  for (std::size_t k = 0; k < channel.gains.rows(); ++k) {
    for (std::size_t n = 0; n < channel.gains.cols(); ++n) {
      out << (k + 1) << ',' << (n + 1) << ',' << format_number(channel.gains(k, n), 17) << '\n';
    }
  }
}

ChannelRealization read_channel_csv(std::istream& in, double noise_var, Scheme scheme) {
  std::string line;
  if (!std::getline(in, line) || line != "k,n,gain") {
    throw ValidationError("channel CSV must start with header 'k,n,gain'");
  }
  std::map<std::pair<std::size_t, std::size_t>, double> entries;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw ValidationError("bad channel row: '" + line + "'");
    const std::size_t k = parse_index(f[0]);
    const std::size_t n = parse_index(f[1]);
    if (k == 0 || n == 0) throw ValidationError("channel indices are 1-based");
    entries[{k - 1, n - 1}] = parse_double(f[2]);
    rows = std::max(rows, k);
    cols = std::max(cols, n);
  }
  if (entries.size() != rows * cols) throw ValidationError("channel CSV is missing entries");
  ChannelRealization channel{Matrix(rows, cols), noise_var, scheme};
  for (const auto& [key, v] : entries) channel.gains(key.first, key.second) = v;
  validate(channel);
  return channel;
}

void write_design_csv(std::ostream& out, const TransceiverDesign& design) {
  out << "kind,k,n,value\n";
  for (std::size_t k = 0; k < design.tx.rows(); ++k) {
    for (std::size_t n = 0; n < design.tx.cols(); ++n) {
      out << "b," << (k + 1) << ',' << (n + 1) << ',' << format_number(design.tx(k, n), 17)
          << '\n';
    }
  }
  for (std::size_t n = 0; n < design.rx.size(); ++n) {
    out << "a,0," << (n + 1) << ',' << format_number(design.rx[n], 17) << '\n';
  }
}

TransceiverDesign read_design_csv(std::istream& in, Scheme scheme) {
  std::string line;
  if (!std::getline(in, line) || line != "kind,k,n,value") {
    throw ValidationError("design CSV must start with header 'kind,k,n,value'");
  }
  std::map<std::pair<std::size_t, std::size_t>, double> tx;
  std::map<std::size_t, double> rx;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ValidationError("bad design row: '" + line + "'");
    const std::size_t k = parse_index(f[1]);
    const std::size_t n = parse_index(f[2]);
    if (n == 0) throw ValidationError("design column indices are 1-based");
    const double v = parse_double(f[3]);
    if (f[0] == "b") {
      if (k == 0) throw ValidationError("design device indices are 1-based");
      tx[{k - 1, n - 1}] = v;
      rows = std::max(rows, k);
    } else if (f[0] == "a") {
      rx[n - 1] = v;
    } else {
      throw ValidationError("unknown design row kind '" + f[0] + "'");
    }
    cols = std::max(cols, n);
  }
  if (tx.size() != rows * cols || rx.size() != cols) {
    throw ValidationError("design CSV is missing entries");
  }
  TransceiverDesign design{Matrix(rows, cols), Vector(cols), scheme};
  for (const auto& [key, v] : tx) design.tx(key.first, key.second) = v;
  for (const auto& [n, v] : rx) design.rx[n] = v;
  return design;
}

}  // namespace isea
