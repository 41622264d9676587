#include "hvsense/signal_frontend.hpp"

#include <algorithm>
#include <cmath>

#include "hvsense/linalg.hpp"
#include "hvsense/search.hpp"

namespace hvsense {

namespace {

constexpr int kSincHalfTaps = 12;

// Hann-windowed sinc for fractional-delay interpolation.
double windowed_sinc(double x) {
  if (std::abs(x) >= kSincHalfTaps) return 0.0;
  const double window =
      0.5 * (1.0 + std::cos(kPi * x / kSincHalfTaps));
  if (std::abs(x) < 1e-12) return window;
  return window * std::sin(kPi * x) / (kPi * x);
}

Eigen::VectorXcd steering_for(const ArrayGeometry& geom, double angle) {
  const Eigen::Vector2d direction{std::cos(angle), std::sin(angle)};
  Eigen::VectorXcd v(geom.count());
  for (int m = 0; m < geom.count(); ++m) {
    const double phase =
        kTwoPi * geom.element_positions[static_cast<size_t>(m)].dot(direction);
    v(m) = std::polar(1.0, phase);
  }
  return v;
}

}  // namespace

ArrayGeometry make_ula(int count, double spacing_wavelengths) {
  ArrayGeometry geom;
  for (int m = 0; m < count; ++m) {
    geom.element_positions.push_back({m * spacing_wavelengths, 0.0});
  }
  return geom;
}

ArrayGeometry make_uca(int count, double min_spacing_wavelengths) {
  ArrayGeometry geom;
  const double radius =
      min_spacing_wavelengths / (2.0 * std::sin(kPi / count));
  for (int m = 0; m < count; ++m) {
    const double angle = kTwoPi * m / count;
    geom.element_positions.push_back(
        {radius * (std::cos(angle) - 1.0), radius * std::sin(angle)});
  }
  return geom;
}

Eigen::VectorXcd steering_tx(const ArrayGeometry& geom, double phi) {
  return steering_for(geom, phi);
}

Eigen::VectorXcd steering_rx(const ArrayGeometry& geom, double theta) {
  return steering_for(geom, theta);
}

WaveformSet fourier_waveforms(int tx_antennas, double bandwidth) {
  WaveformSet set;
  set.codebook.resize(tx_antennas, tx_antennas);
  const double scale = 1.0 / std::sqrt(static_cast<double>(tx_antennas));
  for (int n = 0; n < tx_antennas; ++n) {
    for (int m = 0; m < tx_antennas; ++m) {
      set.codebook(n, m) =
          scale * std::polar(1.0, -kTwoPi * n * m / tx_antennas);
    }
  }
  set.bandwidth = bandwidth;
  set.symbol_interval = 1.0 / bandwidth;
  set.duration = tx_antennas / bandwidth;
  return set;
}

FrontendPath frontend_path_from_budget(const PathBudget& budget,
                                       double gamma_clock, Rng& rng) {
  FrontendPath path;
  path.theta = budget.path.theta;
  path.phi = budget.path.phi;
  path.toa = budget.path.d / kSpeedOfLight + gamma_clock;
  const double amplitude = std::pow(
      10.0, (budget.rx_power_dbm + budget.beam_gain_db +
             10.0 * std::log10(budget.bounce_attenuation)) /
                20.0);
  path.gain = std::polar(amplitude, rng.uniform(0.0, kTwoPi));
  return path;
}

Eigen::MatrixXcd synthesize_rx(const std::vector<FrontendPath>& paths,
                               const WaveformSet& waveforms,
                               const ArrayGeometry& tx_geom,
                               const ArrayGeometry& rx_geom,
                               double noise_power_dbm, Rng& rng) {
  if (paths.empty()) throw DegenerateGeometryError("no paths to synthesize");
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  double max_delay = 0.0;
  for (const auto& p : paths) {
    max_delay = std::max(max_delay, p.toa * waveforms.bandwidth);
  }
  const int samples =
      static_cast<int>(std::ceil(max_delay)) + code_len + 2 * kSincHalfTaps;

  Eigen::MatrixXcd rx =
      Eigen::MatrixXcd::Zero(rx_geom.count(), samples);
  for (const auto& path : paths) {
    const Eigen::VectorXcd a = steering_tx(tx_geom, path.phi);
    const Eigen::VectorXcd b = steering_rx(rx_geom, path.theta);
    const double delay = path.toa * waveforms.bandwidth;
    // Mixed symbol stream a^T s[k], then fractional delay via sinc taps.
    Eigen::VectorXcd symbol_mix(code_len);
    for (int k = 0; k < code_len; ++k) {
      std::complex<double> mixed = 0.0;
      for (int m = 0; m < code_len; ++m) {
        mixed += waveforms.codebook(k, m) * a(m);
      }
      symbol_mix(k) = mixed;
    }
    const int lo = std::max(
        0, static_cast<int>(std::floor(delay)) - kSincHalfTaps);
    const int hi = std::min(
        samples - 1, static_cast<int>(std::ceil(delay)) + code_len +
                         kSincHalfTaps);
    for (int n = lo; n <= hi; ++n) {
      std::complex<double> sample = 0.0;
      for (int k = 0; k < code_len; ++k) {
        sample += symbol_mix(k) * windowed_sinc(n - delay - k);
      }
      rx.col(n) += path.gain * sample * b;
    }
  }

  const double noise_sigma =
      std::pow(10.0, noise_power_dbm / 20.0) / std::sqrt(2.0);
  for (int n = 0; n < samples; ++n) {
    for (int m = 0; m < rx_geom.count(); ++m) {
      rx(m, n) += std::complex<double>(rng.gauss(0.0, noise_sigma),
                                       rng.gauss(0.0, noise_sigma));
    }
  }
  return rx;
}

namespace {

// Matched-filter snapshot at a continuous lag: the codeword is resampled
// with the synthesis kernel, so a path at fractional delay correlates
// without the codeword-mixing bias that skews the AoD subspace.
Eigen::MatrixXcd fractional_snapshot(const Eigen::MatrixXcd& rx,
                                     const WaveformSet& waveforms,
                                     double lag) {
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  const int samples = static_cast<int>(rx.cols());
  const int lo = std::max(0, static_cast<int>(std::floor(lag)) -
                                 kSincHalfTaps);
  const int hi = std::min(samples - 1,
                          static_cast<int>(std::ceil(lag)) + code_len +
                              kSincHalfTaps);
  Eigen::MatrixXcd snapshot =
      Eigen::MatrixXcd::Zero(rx.rows(), waveforms.codebook.cols());
  for (int n = lo; n <= hi; ++n) {
    Eigen::RowVectorXcd shifted =
        Eigen::RowVectorXcd::Zero(waveforms.codebook.cols());
    for (int k = 0; k < code_len; ++k) {
      const double weight = windowed_sinc(n - lag - k);
      if (weight != 0.0) {
        shifted += weight * waveforms.codebook.row(k).conjugate();
      }
    }
    snapshot += rx.col(n) * shifted;
  }
  return snapshot;
}

}  // namespace

std::vector<MatchedFilterPeak> matched_filter(const Eigen::MatrixXcd& rx,
                                              const WaveformSet& waveforms,
                                              const FrontendConfig& cfg) {
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  const int samples = static_cast<int>(rx.cols());
  if (samples < code_len) {
    throw NoPeaksError("stream shorter than the waveform");
  }
  const int lags = samples - code_len + 1;

  std::vector<double> magnitude(static_cast<size_t>(lags));
  std::vector<Eigen::MatrixXcd> snapshots(static_cast<size_t>(lags));
  for (int z = 0; z < lags; ++z) {
    // Y[z] = sum_n r[n] s^H[n - z].
    Eigen::MatrixXcd y = rx.block(0, z, rx.rows(), code_len) *
                         waveforms.codebook.conjugate();
    magnitude[static_cast<size_t>(z)] = y.norm();
    snapshots[static_cast<size_t>(z)] = std::move(y);
  }

  // Noise floor of ||Y||_F for a pure-noise snapshot, then the detection
  // threshold sits peak_threshold_db above it.
  const double noise_sigma = std::pow(10.0, cfg.noise_power_dbm / 20.0);
  const double floor =
      noise_sigma * std::sqrt(static_cast<double>(rx.rows() * code_len));
  const double threshold =
      floor * std::pow(10.0, cfg.peak_threshold_db / 20.0);

  std::vector<MatchedFilterPeak> candidates;
  for (int z = 0; z < lags; ++z) {
    const double here = magnitude[static_cast<size_t>(z)];
    if (here < threshold) continue;
    const double prev = z > 0 ? magnitude[static_cast<size_t>(z - 1)] : 0.0;
    const double next =
        z + 1 < lags ? magnitude[static_cast<size_t>(z + 1)] : 0.0;
    if (here < prev || here <= next) continue;
    MatchedFilterPeak peak;
    peak.sample = z;
    peak.snapshot = snapshots[static_cast<size_t>(z)];
    peak.magnitude = here;
    peak.toa = z / waveforms.bandwidth;
    candidates.push_back(std::move(peak));
  }

  // Interpolation sidelobes of a strong arrival show up as much weaker
  // local maxima a few samples away; keep near-equal neighbors (genuinely
  // close paths) and drop the rest.
  std::sort(candidates.begin(), candidates.end(),
            [](const MatchedFilterPeak& a, const MatchedFilterPeak& b) {
              return a.magnitude > b.magnitude;
            });
  // Correlation slope ripple sits within a codeword of a real arrival at
  // up to a few dB down; interpolation-kernel tails reach further but much
  // weaker. Two suppression tiers cover both.
  const int near_window = code_len;
  const int far_window = code_len + 2 * kSincHalfTaps;
  std::vector<MatchedFilterPeak> peaks;
  for (auto& cand : candidates) {
    bool shadowed = false;
    for (const auto& kept : peaks) {
      const int gap = std::abs(kept.sample - cand.sample);
      if ((gap <= near_window && cand.magnitude < 0.7 * kept.magnitude) ||
          (gap <= far_window && cand.magnitude < 0.2 * kept.magnitude)) {
        shadowed = true;
        break;
      }
    }
    if (!shadowed) peaks.push_back(std::move(cand));
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const MatchedFilterPeak& a, const MatchedFilterPeak& b) {
              return a.sample < b.sample;
            });
  if (peaks.empty()) {
    throw NoPeaksError("no matched-filter peak above the threshold");
  }

  for (auto& peak : peaks) {
    peak.toa = peak.sample / waveforms.bandwidth;
  }
  return peaks;
}

Eigen::MatrixXcd synthesize_rx_periodic(const std::vector<FrontendPath>& paths,
                                        const WaveformSet& waveforms,
                                        const ArrayGeometry& tx_geom,
                                        const ArrayGeometry& rx_geom,
                                        const FrontendConfig& cfg, Rng& rng) {
  if (paths.empty()) throw DegenerateGeometryError("no paths to synthesize");
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  const int period = cfg.period_samples;
  if (period < code_len + 2 * kSincHalfTaps) {
    throw ConfigError("period too short for the codeword and kernel");
  }

  // Anchor the earliest arrival a few samples into the window; the global
  // shift is indistinguishable from a clock offset downstream.
  double min_delay = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) {
    min_delay = std::min(min_delay, p.toa * waveforms.bandwidth);
  }
  const double anchor = min_delay - 8.0;

  Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(rx_geom.count(), period);
  for (const auto& path : paths) {
    const Eigen::VectorXcd a = steering_tx(tx_geom, path.phi);
    const Eigen::VectorXcd b = steering_rx(rx_geom, path.theta);
    const double delay = path.toa * waveforms.bandwidth - anchor;
    Eigen::VectorXcd symbol_mix(code_len);
    for (int k = 0; k < code_len; ++k) {
      std::complex<double> mixed = 0.0;
      for (int m = 0; m < code_len; ++m) {
        mixed += waveforms.codebook(k, m) * a(m);
      }
      symbol_mix(k) = mixed;
    }
    const int lo = static_cast<int>(std::floor(delay)) - kSincHalfTaps;
    const int hi =
        static_cast<int>(std::ceil(delay)) + code_len + kSincHalfTaps;
    for (int n = lo; n <= hi; ++n) {
      std::complex<double> sample = 0.0;
      for (int k = 0; k < code_len; ++k) {
        sample += symbol_mix(k) * windowed_sinc(n - delay - k);
      }
      const int wrapped = ((n % period) + period) % period;
      rx.col(wrapped) += path.gain * sample * b;
    }
  }

  const double noise_sigma = std::pow(10.0, cfg.noise_power_dbm / 20.0) /
                             std::sqrt(2.0 * std::max(cfg.repetitions, 1));
  for (int n = 0; n < period; ++n) {
    for (int m = 0; m < rx_geom.count(); ++m) {
      rx(m, n) += std::complex<double>(rng.gauss(0.0, noise_sigma),
                                       rng.gauss(0.0, noise_sigma));
    }
  }
  return rx;
}

namespace {

Eigen::MatrixXcd fractional_snapshot_periodic(const Eigen::MatrixXcd& rx,
                                              const WaveformSet& waveforms,
                                              double lag) {
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  const int period = static_cast<int>(rx.cols());
  const int lo = static_cast<int>(std::floor(lag)) - kSincHalfTaps;
  const int hi =
      static_cast<int>(std::ceil(lag)) + code_len + kSincHalfTaps;
  Eigen::MatrixXcd snapshot =
      Eigen::MatrixXcd::Zero(rx.rows(), waveforms.codebook.cols());
  for (int n = lo; n <= hi; ++n) {
    Eigen::RowVectorXcd shifted =
        Eigen::RowVectorXcd::Zero(waveforms.codebook.cols());
    for (int k = 0; k < code_len; ++k) {
      const double weight = windowed_sinc(n - lag - k);
      if (weight != 0.0) {
        shifted += weight * waveforms.codebook.row(k).conjugate();
      }
    }
    const int wrapped = ((n % period) + period) % period;
    snapshot += rx.col(wrapped) * shifted;
  }
  return snapshot;
}

}  // namespace

std::vector<MatchedFilterPeak> matched_filter_periodic(
    const Eigen::MatrixXcd& rx_period, const WaveformSet& waveforms,
    const FrontendConfig& cfg) {
  const int code_len = static_cast<int>(waveforms.codebook.rows());
  const int period = static_cast<int>(rx_period.cols());

  std::vector<double> magnitude(static_cast<size_t>(period));
  std::vector<Eigen::MatrixXcd> snapshots(static_cast<size_t>(period));
  for (int z = 0; z < period; ++z) {
    Eigen::MatrixXcd y =
        Eigen::MatrixXcd::Zero(rx_period.rows(), waveforms.codebook.cols());
    for (int k = 0; k < code_len; ++k) {
      y += rx_period.col((z + k) % period) *
           waveforms.codebook.row(k).conjugate();
    }
    magnitude[static_cast<size_t>(z)] = y.norm();
    snapshots[static_cast<size_t>(z)] = std::move(y);
  }

  const double noise_sigma = std::pow(10.0, cfg.noise_power_dbm / 20.0) /
                             std::sqrt(std::max(cfg.repetitions, 1));
  const double floor =
      noise_sigma *
      std::sqrt(static_cast<double>(rx_period.rows() * code_len));
  const double threshold =
      floor * std::pow(10.0, cfg.peak_threshold_db / 20.0);

  std::vector<MatchedFilterPeak> candidates;
  for (int z = 0; z < period; ++z) {
    const double here = magnitude[static_cast<size_t>(z)];
    if (here < threshold) continue;
    const double prev =
        magnitude[static_cast<size_t>((z + period - 1) % period)];
    const double next = magnitude[static_cast<size_t>((z + 1) % period)];
    if (here < prev || here <= next) continue;
    MatchedFilterPeak peak;
    peak.sample = z;
    peak.snapshot = snapshots[static_cast<size_t>(z)];
    peak.magnitude = here;
    candidates.push_back(std::move(peak));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MatchedFilterPeak& a, const MatchedFilterPeak& b) {
              return a.magnitude > b.magnitude;
            });
  const int near_window = code_len;
  const int far_window = code_len + 2 * kSincHalfTaps;
  std::vector<MatchedFilterPeak> peaks;
  for (auto& cand : candidates) {
    bool shadowed = false;
    for (const auto& kept : peaks) {
      const int raw_gap = std::abs(kept.sample - cand.sample);
      const int gap = std::min(raw_gap, period - raw_gap);
      if ((gap <= near_window && cand.magnitude < 0.7 * kept.magnitude) ||
          (gap <= far_window && cand.magnitude < 0.2 * kept.magnitude)) {
        shadowed = true;
        break;
      }
    }
    if (!shadowed) peaks.push_back(std::move(cand));
  }
  if (peaks.empty()) {
    throw NoPeaksError("no matched-filter peak above the threshold");
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const MatchedFilterPeak& a, const MatchedFilterPeak& b) {
              return a.sample < b.sample;
            });

  for (auto& peak : peaks) {
    peak.toa = peak.sample / waveforms.bandwidth;
  }
  return peaks;
}

std::vector<AnglePair> music_2d(const Eigen::MatrixXcd& snapshot,
                                const ArrayGeometry& tx_geom,
                                const ArrayGeometry& rx_geom,
                                const FrontendConfig& cfg) {
  const int m_r = static_cast<int>(snapshot.rows());
  const int m_t = static_cast<int>(snapshot.cols());
  const int max_paths = std::min(m_r, m_t) - 1;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      snapshot, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();

  // Signal count from the largest singular-value gap. Gaps among values
  // below the rank tolerance are numerical noise, and components more than
  // ~34 dB under the dominant one are interpolation leakage from paths in
  // neighboring delay bins, not co-arrivals.
  const double floor_sv =
      std::max(svd_rank_tolerance(m_r, m_t, sv.size() > 0 ? sv(0) : 0.0),
               0.02 * (sv.size() > 0 ? sv(0) : 0.0));
  int count = 1;
  double best_ratio = 0.0;
  for (int i = 0; i + 1 <= max_paths; ++i) {
    if (sv(i) <= floor_sv) break;
    const double ratio = sv(i) / std::max(sv(i + 1), 1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      count = i + 1;
    }
  }
  if (count >= std::min(m_r, m_t)) {
    throw SubspaceRankError("co-arriving path count exhausts the subspace");
  }

  const Eigen::MatrixXcd u_s = svd.matrixU().leftCols(count);
  const Eigen::MatrixXcd v_s = svd.matrixV().leftCols(count);

  // Projection deficits: zero where the steering vector lies in the signal
  // subspace. Row space of Y is spanned by conj(a), hence the conjugate.
  const auto rx_deficit = [&](double theta) {
    const Eigen::VectorXcd b = steering_rx(rx_geom, theta);
    return b.squaredNorm() - (u_s.adjoint() * b).squaredNorm();
  };
  const auto tx_deficit = [&](double phi) {
    const Eigen::VectorXcd a = steering_tx(tx_geom, phi).conjugate();
    return a.squaredNorm() - (v_s.adjoint() * a).squaredNorm();
  };

  const auto best_angles = [&](const std::function<double(double)>& deficit) {
    const int cells = static_cast<int>(std::ceil(kTwoPi / cfg.grid_step));
    std::vector<double> value(static_cast<size_t>(cells));
    for (int i = 0; i < cells; ++i) value[static_cast<size_t>(i)] =
        deficit(i * kTwoPi / cells);
    std::vector<std::pair<double, double>> minima;  // (value, angle)
    for (int i = 0; i < cells; ++i) {
      const double prev = value[static_cast<size_t>((i + cells - 1) % cells)];
      const double next = value[static_cast<size_t>((i + 1) % cells)];
      if (value[static_cast<size_t>(i)] <= prev &&
          value[static_cast<size_t>(i)] <= next) {
        minima.emplace_back(value[static_cast<size_t>(i)],
                            i * kTwoPi / cells);
      }
    }
    std::sort(minima.begin(), minima.end());
    if (static_cast<int>(minima.size()) > count) {
      minima.resize(static_cast<size_t>(count));
    }
    std::vector<double> refined;
    for (const auto& [v, angle] : minima) {
      refined.push_back(normalize_angle(golden_section_minimize(
          deficit, angle - kTwoPi / cells, angle + kTwoPi / cells, 1e-9,
          120)));
    }
    return refined;
  };

  const std::vector<double> thetas = best_angles(rx_deficit);
  const std::vector<double> phis = best_angles(tx_deficit);

  // Amplitude pairing: cross combinations decohere against the snapshot.
  const auto coupling = [&](double theta, double phi) {
    const Eigen::VectorXcd b = steering_rx(rx_geom, theta);
    const Eigen::VectorXcd a = steering_tx(tx_geom, phi);
    return (b.adjoint() * snapshot * a.conjugate())(0) /
           static_cast<double>(m_r * m_t);
  };

  // A path at fractional offset f from the snapshot lag reaches the
  // codebook-domain as C^H W(f) C a(phi), with W(f) the Toeplitz matrix of
  // the interpolation kernel. Fitting (phi, f) against that exact model
  // removes the delay-induced AoD bias and reads off the sub-sample delay.
  const WaveformSet model_set = fourier_waveforms(m_t, 1.0);
  const auto mixed_deficit = [&](double phi, double f) {
    const Eigen::VectorXcd a = steering_tx(tx_geom, phi);
    Eigen::MatrixXd w(m_t, m_t);
    for (int i = 0; i < m_t; ++i) {
      for (int j = 0; j < m_t; ++j) {
        w(i, j) = windowed_sinc(i - j - f);
      }
    }
    const Eigen::VectorXcd mixed =
        model_set.codebook.adjoint() * (w * (model_set.codebook * a));
    const Eigen::VectorXcd conj_mixed = mixed.conjugate();
    const double norm2 = conj_mixed.squaredNorm();
    if (norm2 <= 1e-30) return 1.0;
    return 1.0 - (v_s.adjoint() * conj_mixed).squaredNorm() / norm2;
  };

  std::vector<AnglePair> pairs;
  std::vector<bool> used_phi(phis.size(), false);
  for (const double theta : thetas) {
    double best = -1.0;
    int pick = -1;
    for (size_t j = 0; j < phis.size(); ++j) {
      if (used_phi[j]) continue;
      const double magnitude = std::abs(coupling(theta, phis[j]));
      if (magnitude > best) {
        best = magnitude;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) continue;
    used_phi[static_cast<size_t>(pick)] = true;

    // The deficit valley runs diagonally in (phi, f); scan a small grid
    // before polishing so coordinate descent cannot stall on the ridge.
    double phi = phis[static_cast<size_t>(pick)];
    double frac = 0.0;
    {
      const double phi0 = phi;
      double best_value = std::numeric_limits<double>::infinity();
      for (int i = -24; i <= 24; ++i) {
        const double phi_try = phi0 + i * deg2rad(0.5);
        for (int j = -10; j <= 10; ++j) {
          const double f_try = j * 0.1;
          const double value = mixed_deficit(phi_try, f_try);
          if (value < best_value) {
            best_value = value;
            phi = phi_try;
            frac = f_try;
          }
        }
      }
    }
    for (int round = 0; round < 6; ++round) {
      frac = golden_section_minimize(
          [&](double x) { return mixed_deficit(phi, x); }, frac - 0.12,
          frac + 0.12, 1e-10, 120);
      phi = golden_section_minimize(
          [&](double x) { return mixed_deficit(x, frac); },
          phi - deg2rad(0.6), phi + deg2rad(0.6), 1e-10, 120);
    }
    phi = normalize_angle(phi);

    AnglePair pair;
    pair.theta = theta;
    pair.phi = phi;
    pair.gain = coupling(theta, phi);
    pair.delay_offset = frac;
    pairs.push_back(pair);
  }
  return pairs;
}

std::vector<PathObservation> frontend_observations(
    const std::vector<FrontendPath>& paths, const FrontendConfig& cfg,
    Rng& rng) {
  const ArrayGeometry tx_geom = make_uca(cfg.tx_antennas);
  const ArrayGeometry rx_geom = make_uca(cfg.rx_antennas);
  const WaveformSet waveforms =
      fourier_waveforms(cfg.tx_antennas, cfg.bandwidth);

  const Eigen::MatrixXcd rx =
      synthesize_rx_periodic(paths, waveforms, tx_geom, rx_geom, cfg, rng);
  const auto peaks = matched_filter_periodic(rx, waveforms, cfg);

  struct Resolved {
    double theta, phi, toa;
  };
  std::vector<Resolved> resolved;
  for (const auto& peak : peaks) {
    for (const auto& pair : music_2d(peak.snapshot, tx_geom, rx_geom, cfg)) {
      resolved.push_back(
          {pair.theta, pair.phi,
           peak.toa + pair.delay_offset / waveforms.bandwidth});
    }
  }
  std::sort(resolved.begin(), resolved.end(),
            [](const Resolved& a, const Resolved& b) { return a.toa < b.toa; });

  std::vector<PathObservation> obs;
  for (const auto& r : resolved) {
    PathObservation o;
    o.theta = r.theta;
    o.phi = r.phi;
    o.lambda = r.toa;
    o.rho = obs.empty() ? 0.0 : r.toa - obs.front().lambda;
    obs.push_back(o);
  }
  return obs;
}

}  // namespace hvsense
