#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "isea/linalg.hpp"
#include "isea/sensing.hpp"

namespace isea {

enum class Scheme { kTdm, kFdm };

Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme scheme) noexcept;

/// Channel magnitudes |h_{k,n}|, K x N. Under TDM every column is the same
/// quasi-static draw.
struct ChannelRealization {
  Matrix gains;
  double noise_var = 0.1;
  Scheme scheme = Scheme::kFdm;
};

void validate(const ChannelRealization& channel);

/// Transmit magnitudes |b_{k,n}| (K x N) and receive magnitudes |a_n|.
struct TransceiverDesign {
  Matrix tx;
  Vector rx;
  Scheme scheme = Scheme::kFdm;
};

struct ProxyBound {
  double a0 = 1.0;
  double margin = 1.0;
};

/// `y_hat` estimates the unit-gain sum of the local estimates; divide by K
/// (see decoded()) to compare with `y_ideal`, the arithmetic mean.
struct AggregatedFeature {
  Vector y_hat;
  Vector y_ideal;

  Vector decoded(std::size_t num_devices) const;
};

/// Relative slack allowed on every power budget.
inline constexpr double kPowerSlack = 1e-9;

/// Power spent by each device: per slot under TDM (maximum over slots),
/// summed over subcarriers under FDM.
Vector device_power(const TransceiverDesign& design, const Matrix& second_moments);

/// Throws InfeasibleDesign naming the first device over budget.
void check_power(const TransceiverDesign& design, std::span<const DeviceProfile> profiles);

Vector ideal_average(std::span<const EstimatedFeature> estimates);

/// Over-the-air aggregation. Feature m rides slot/subcarrier m; columns past
/// the feature dimension stay idle.
AggregatedFeature transmit_aggregate(std::span<const EstimatedFeature> estimates,
                                     std::span<const DeviceProfile> profiles,
                                     const ChannelRealization& channel,
                                     const TransceiverDesign& design, std::uint64_t seed);

/// Per-column AirComp MSE against the unit-gain sum:
/// sum_k (a h b - 1)^2 sigma_hat^2 + a^2 sigma_w^2.
Vector analytic_mse(const ChannelRealization& channel, const TransceiverDesign& design,
                    const Matrix& sigma_hat);

/// Per-column minimum MD of the received feature. Independent of rx.
Vector received_md(const ChannelRealization& channel, const TransceiverDesign& design,
                   const Matrix& sigma_hat, std::span<const double> delta);

/// A0 * max(0, 1 - total_mse / margin^2).
double markov_bound(const ProxyBound& bound, double total_mse);

struct ChannelParams {
  /// E|h|^2.
  double scale = 1.0;
};

/// Rayleigh magnitudes, independent across devices and subcarriers.
ChannelRealization sample_channel(std::size_t num_devices, std::size_t num_columns, Scheme scheme,
                                  const ChannelParams& params, double noise_var,
                                  std::uint64_t seed);

/// 10 log10(P_k / sigma_w^2).
double comm_snr(const DeviceProfile& profile, const ChannelRealization& channel);

/// CSV `k,n,gain` (1-based indices).
void write_channel_csv(std::ostream& out, const ChannelRealization& channel);
/// Parses write_channel_csv output; noise and scheme are not part of the file.
ChannelRealization read_channel_csv(std::istream& in, double noise_var, Scheme scheme);

/// CSV `kind,k,n,value` with kind `b` (k,n filled) or `a` (k = 0).
void write_design_csv(std::ostream& out, const TransceiverDesign& design);
TransceiverDesign read_design_csv(std::istream& in, Scheme scheme);

}  // namespace isea
