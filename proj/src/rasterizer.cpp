#include "gsslam/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "gsslam/errors.hpp"

namespace gsslam {

namespace {

// Runs fn(begin, end) over [0, total) split into contiguous chunks, one per
// worker. Chunk boundaries depend only on the worker count, so reductions
// that respect chunk order are reproducible for a fixed worker count.
void parallel_ranges(int total, int threads, const std::function<void(int, int, int)>& fn) {
  threads = std::max(1, std::min(threads, total));
  if (threads <= 1) {
    fn(0, total, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (total + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end, t);
  }
  for (auto& th : pool) th.join();
}

struct QuatRotation {
  Eigen::Vector4d q_hat;  // normalized (w,x,y,z)
  double norm;
  Eigen::Matrix3d R;
};

QuatRotation quat_rotation(const Eigen::Vector4d& q) {
  QuatRotation out;
  out.norm = q.norm();
  out.q_hat = q / out.norm;
  out.R = Eigen::Quaterniond(out.q_hat[0], out.q_hat[1], out.q_hat[2], out.q_hat[3])
              .toRotationMatrix();
  return out;
}

// Contraction of dL/dR with dR/dq_hat for the standard unit-quaternion
// rotation matrix, followed by the normalization Jacobian back to raw q.
Eigen::Vector4d quat_backward(const Eigen::Matrix3d& Gr, const QuatRotation& qr) {
  const double w = qr.q_hat[0], x = qr.q_hat[1], y = qr.q_hat[2], z = qr.q_hat[3];
  Eigen::Vector4d d_hat;
  d_hat[0] = 2.0 * (-z * Gr(0, 1) + y * Gr(0, 2) + z * Gr(1, 0) - x * Gr(1, 2) -
                    y * Gr(2, 0) + x * Gr(2, 1));
  d_hat[1] = 2.0 * (y * Gr(0, 1) + z * Gr(0, 2) + y * Gr(1, 0) - 2.0 * x * Gr(1, 1) -
                    w * Gr(1, 2) + z * Gr(2, 0) + w * Gr(2, 1) - 2.0 * x * Gr(2, 2));
  d_hat[2] = 2.0 * (-2.0 * y * Gr(0, 0) + x * Gr(0, 1) + w * Gr(0, 2) + x * Gr(1, 0) +
                    z * Gr(1, 2) - w * Gr(2, 0) + z * Gr(2, 1) - 2.0 * y * Gr(2, 2));
  d_hat[3] = 2.0 * (-2.0 * z * Gr(0, 0) - w * Gr(0, 1) + x * Gr(0, 2) + w * Gr(1, 0) -
                    2.0 * z * Gr(1, 1) + y * Gr(1, 2) + x * Gr(2, 0) + y * Gr(2, 1));
  // Through q_hat = q / |q|.
  return (d_hat - qr.q_hat * qr.q_hat.dot(d_hat)) / qr.norm;
}

}  // namespace

void MapGradients::resize(size_t n) {
  mu.assign(n, Eigen::Vector3d::Zero());
  log_scale.assign(n, Eigen::Vector3d::Zero());
  q.assign(n, Eigen::Vector4d::Zero());
  opacity_logit.assign(n, 0.0);
  color.assign(n, Eigen::Vector3d::Zero());
  mu2d_norm.assign(n, 0.0);
  pose = Twist();
}

void MapGradients::set_zero() { resize(mu.size()); }

void MapGradients::accumulate(const MapGradients& other) {
  for (size_t i = 0; i < mu.size(); ++i) {
    mu[i] += other.mu[i];
    log_scale[i] += other.log_scale[i];
    q[i] += other.q[i];
    opacity_logit[i] += other.opacity_logit[i];
    color[i] += other.color[i];
    mu2d_norm[i] += other.mu2d_norm[i];
  }
  pose.omega += other.pose.omega;
  pose.v += other.pose.v;
}

Eigen::Vector3d regularized_conic(const Eigen::Matrix2d& sigma2d, double reg) {
  const double sxx = sigma2d(0, 0) + reg;
  const double sxy = 0.5 * (sigma2d(0, 1) + sigma2d(1, 0));
  const double syy = sigma2d(1, 1) + reg;
  const double det = sxx * syy - sxy * sxy;
  return Eigen::Vector3d(syy / det, -sxy / det, sxx / det);
}

double eval_splat_weight(const Eigen::Vector2d& mu2d, const Eigen::Vector3d& conic,
                         double opacity, const Eigen::Vector2d& p, double max_weight) {
  const Eigen::Vector2d d = p - mu2d;
  const double power =
      -0.5 * (conic[0] * d.x() * d.x() + 2.0 * conic[1] * d.x() * d.y() +
              conic[2] * d.y() * d.y());
  if (power > 0.0) return 0.0;
  return std::min(opacity * std::exp(power), max_weight);
}

RenderResult render_frame(std::span<const Gaussian3D> map, const CameraPose& T,
                          const Intrinsics& K, const RenderConfig& cfg, uint64_t map_version) {
  const int W = K.width;
  const int H = K.height;
  RenderResult out;
  out.color = ColorImage(W, H, Eigen::Vector3d::Zero());
  out.depth = GrayImage(W, H, 0.0);
  out.opacity = GrayImage(W, H, 0.0);
  out.map_version = map_version;
  out.map_size = map.size();
  out.pixel_offset.assign(static_cast<size_t>(W) * H + 1, 0);
  if (map.empty()) return out;

  // Project every Gaussian; cull behind the near plane or off screen.
  const Eigen::Matrix3d Wrot = T.rotation_matrix();
  const Eigen::Vector3d trans = T.translation();
  std::vector<Splat> splats(map.size());
  std::vector<uint8_t> alive(map.size(), 0);
  parallel_ranges(static_cast<int>(map.size()), cfg.threads, [&](int begin, int end, int) {
    for (int i = begin; i < end; ++i) {
      const Gaussian3D& g = map[static_cast<size_t>(i)];
      const Eigen::Vector3d x_cam = Wrot * g.mu + trans;
      if (!(x_cam.z() > cfg.near_plane)) continue;

      Splat s;
      s.index = static_cast<uint32_t>(i);
      s.x_cam = x_cam;
      const double inv_d = 1.0 / x_cam.z();
      s.mu2d = Eigen::Vector2d(K.fx * x_cam.x() * inv_d + K.cx, K.fy * x_cam.y() * inv_d + K.cy);

      const Eigen::Matrix<double, 2, 3> J = perspective_jacobian(x_cam, K);
      const QuatRotation qr = quat_rotation(g.q);
      const Eigen::Matrix3d M = qr.R * g.scales().asDiagonal();
      const Eigen::Matrix<double, 2, 3> A = J * Wrot * M;
      const Eigen::Matrix2d sigma2d = A * A.transpose();
      s.conic = regularized_conic(sigma2d, cfg.covariance_reg);
      s.opacity = sigmoid(g.opacity_logit);

      const double rx = cfg.support_sigmas * std::sqrt(sigma2d(0, 0) + cfg.covariance_reg);
      const double ry = cfg.support_sigmas * std::sqrt(sigma2d(1, 1) + cfg.covariance_reg);
      s.x0 = std::max(0, static_cast<int>(std::ceil(s.mu2d.x() - rx)));
      s.x1 = std::min(W - 1, static_cast<int>(std::floor(s.mu2d.x() + rx)));
      s.y0 = std::max(0, static_cast<int>(std::ceil(s.mu2d.y() - ry)));
      s.y1 = std::min(H - 1, static_cast<int>(std::floor(s.mu2d.y() + ry)));
      if (s.x0 > s.x1 || s.y0 > s.y1) continue;

      splats[static_cast<size_t>(i)] = s;
      alive[static_cast<size_t>(i)] = 1;
    }
  });

  out.splats.reserve(map.size());
  for (size_t i = 0; i < map.size(); ++i) {
    if (alive[i]) out.splats.push_back(splats[i]);
  }
  splats.clear();
  if (out.splats.empty()) return out;

  // Canonical compositing order: increasing depth, ties by map index.
  std::sort(out.splats.begin(), out.splats.end(), [](const Splat& a, const Splat& b) {
    if (a.x_cam.z() != b.x_cam.z()) return a.x_cam.z() < b.x_cam.z();
    return a.index < b.index;
  });

  // Candidate lists per pixel (CSR), filled in depth order.
  std::vector<uint32_t> cand_count(static_cast<size_t>(W) * H, 0);
  for (const Splat& s : out.splats) {
    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) cand_count[static_cast<size_t>(y) * W + x]++;
    }
  }
  std::vector<size_t> cand_offset(static_cast<size_t>(W) * H + 1, 0);
  for (size_t p = 0; p < cand_count.size(); ++p) cand_offset[p + 1] = cand_offset[p] + cand_count[p];
  std::vector<uint32_t> cand(cand_offset.back());
  {
    std::vector<size_t> cursor(cand_offset.begin(), cand_offset.end() - 1);
    for (uint32_t si = 0; si < out.splats.size(); ++si) {
      const Splat& s = out.splats[si];
      for (int y = s.y0; y <= s.y1; ++y) {
        for (int x = s.x0; x <= s.x1; ++x) cand[cursor[static_cast<size_t>(y) * W + x]++] = si;
      }
    }
  }

  // Composite each pixel front to back; the records live in candidate-sized
  // scratch and get compacted below.
  std::vector<Contribution> scratch(cand.size());
  std::vector<uint32_t> saved_count(static_cast<size_t>(W) * H, 0);
  parallel_ranges(H, cfg.threads, [&](int y0, int y1, int) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < W; ++x) {
        const size_t p = static_cast<size_t>(y) * W + x;
        const Eigen::Vector2d pix(static_cast<double>(x), static_cast<double>(y));
        double trans_acc = 1.0;
        Eigen::Vector3d c_acc = Eigen::Vector3d::Zero();
        double d_acc = 0.0;
        double o_acc = 0.0;
        uint32_t n_saved = 0;
        for (size_t k = cand_offset[p]; k < cand_offset[p + 1]; ++k) {
          if (trans_acc < cfg.min_transmittance) break;
          const Splat& s = out.splats[cand[k]];
          const Eigen::Vector2d d = pix - s.mu2d;
          const double power =
              -0.5 * (s.conic[0] * d.x() * d.x() + 2.0 * s.conic[1] * d.x() * d.y() +
                      s.conic[2] * d.y() * d.y());
          if (power > 0.0 || power < cfg.min_power) continue;
          const double g = std::min(s.opacity * std::exp(power), cfg.max_weight);
          const double w = g * trans_acc;
          c_acc += w * map[s.index].color;
          d_acc += w * s.x_cam.z();
          o_acc += w;
          scratch[cand_offset[p] + n_saved] = Contribution{cand[k], g, trans_acc};
          ++n_saved;
          trans_acc *= (1.0 - g);
        }
        out.color(x, y) = c_acc;
        out.depth(x, y) = d_acc;
        out.opacity(x, y) = o_acc;
        saved_count[p] = n_saved;
      }
    }
  });

  // Compact the saved records into an exact CSR.
  for (size_t p = 0; p < saved_count.size(); ++p) {
    out.pixel_offset[p + 1] = out.pixel_offset[p] + saved_count[p];
  }
  out.contribs.resize(out.pixel_offset.back());
  for (size_t p = 0; p < saved_count.size(); ++p) {
    std::copy_n(scratch.begin() + static_cast<long>(cand_offset[p]), saved_count[p],
                out.contribs.begin() + static_cast<long>(out.pixel_offset[p]));
  }
  return out;
}

std::vector<uint32_t> RenderResult::contributing_indices(double min_weight) const {
  std::vector<uint8_t> seen(map_size, 0);
  for (const Contribution& c : contribs) {
    if (c.weight > min_weight) seen[splats[c.splat].index] = 1;
  }
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < map_size; ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

MapGradients render_backward(const RenderResult& ctx, std::span<const Gaussian3D> map,
                             const CameraPose& T, const Intrinsics& K,
                             const ColorImage& dL_dcolor, const GrayImage& dL_ddepth,
                             const GrayImage& dL_dopacity, const RenderConfig& cfg,
                             uint64_t map_version) {
  if (ctx.map_version != map_version || ctx.map_size != map.size()) {
    throw Error(ErrorKind::StaleContext, "map mutated since the forward pass");
  }
  const int W = K.width;
  const int H = K.height;

  MapGradients grads;
  grads.resize(map.size());
  if (ctx.splats.empty()) return grads;

  const size_t ns = ctx.splats.size();
  // Screen-space accumulators per splat: d(mu2d), d(conic a,b,c),
  // d(opacity_logit), d(color), d(camera depth).
  struct ScreenAccum {
    Eigen::Vector2d mu2d = Eigen::Vector2d::Zero();
    Eigen::Vector3d conic = Eigen::Vector3d::Zero();
    double opl = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double depth = 0.0;
  };

  const int threads = std::max(1, std::min(cfg.threads, H));
  std::vector<std::vector<ScreenAccum>> partials(threads, std::vector<ScreenAccum>(ns));
  parallel_ranges(H, threads, [&](int y0, int y1, int tid) {
    std::vector<ScreenAccum>& acc = partials[tid];
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < W; ++x) {
        const size_t p = static_cast<size_t>(y) * W + x;
        const size_t begin = ctx.pixel_offset[p];
        const size_t end = ctx.pixel_offset[p + 1];
        if (begin == end) continue;
        const Eigen::Vector2d pix(static_cast<double>(x), static_cast<double>(y));
        const Eigen::Vector3d dC = dL_dcolor(x, y);
        const double dD = dL_ddepth(x, y);
        const double dO = dL_dopacity(x, y);

        Eigen::Vector3d suffix_c = Eigen::Vector3d::Zero();
        double suffix_d = 0.0;
        double suffix_o = 0.0;
        for (size_t k = end; k-- > begin;) {
          const Contribution& rec = ctx.contribs[k];
          const Splat& s = ctx.splats[rec.splat];
          ScreenAccum& a = acc[rec.splat];
          const double g = rec.weight;
          const double trans = rec.transmittance;
          const double gT = g * trans;
          const Eigen::Vector3d& col = map[s.index].color;
          const double depth_i = s.x_cam.z();

          a.color += gT * dC;
          a.depth += gT * dD;

          const double one_m = 1.0 - g;
          const double dL_dg = dC.dot(col * trans - suffix_c / one_m) +
                               dD * (depth_i * trans - suffix_d / one_m) +
                               dO * (trans - suffix_o / one_m);
          suffix_c += gT * col;
          suffix_d += gT * depth_i;
          suffix_o += gT;

          if (g >= cfg.max_weight) continue;  // clamped: flat w.r.t. g inputs
          a.opl += dL_dg * g * (1.0 - s.opacity);
          const double dL_dpower = dL_dg * g;
          const Eigen::Vector2d d = pix - s.mu2d;
          a.conic[0] += dL_dpower * (-0.5 * d.x() * d.x());
          a.conic[1] += dL_dpower * (-d.x() * d.y());
          a.conic[2] += dL_dpower * (-0.5 * d.y() * d.y());
          a.mu2d.x() += dL_dpower * (s.conic[0] * d.x() + s.conic[1] * d.y());
          a.mu2d.y() += dL_dpower * (s.conic[1] * d.x() + s.conic[2] * d.y());
        }
      }
    }
  });

  // Ordered reduction over worker partials keeps results reproducible for a
  // fixed worker count.
  std::vector<ScreenAccum>& acc = partials[0];
  for (int t = 1; t < threads; ++t) {
    for (size_t i = 0; i < ns; ++i) {
      acc[i].mu2d += partials[t][i].mu2d;
      acc[i].conic += partials[t][i].conic;
      acc[i].opl += partials[t][i].opl;
      acc[i].color += partials[t][i].color;
      acc[i].depth += partials[t][i].depth;
    }
  }

  // Geometric chain per splat, then a deterministic pose reduction.
  const Eigen::Matrix3d Wrot = T.rotation_matrix();
  std::vector<Twist> pose_partial(ns);
  parallel_ranges(static_cast<int>(ns), cfg.threads, [&](int begin, int end, int) {
    for (int si = begin; si < end; ++si) {
      const Splat& s = ctx.splats[static_cast<size_t>(si)];
      const ScreenAccum& a = acc[static_cast<size_t>(si)];
      const Gaussian3D& g3 = map[s.index];
      const Eigen::Vector3d& x = s.x_cam;
      const double z = x.z();
      const double inv_z2 = 1.0 / (z * z);
      const Eigen::Matrix<double, 2, 3> J = perspective_jacobian(x, K);

      // conic -> regularized 2D covariance
      Eigen::Matrix2d Q;
      Q << s.conic[0], s.conic[1], s.conic[1], s.conic[2];
      Eigen::Matrix2d Ga;
      Ga << a.conic[0], 0.5 * a.conic[1], 0.5 * a.conic[1], a.conic[2];
      const Eigen::Matrix2d P = -(Q * Ga * Q);

      const QuatRotation qr = quat_rotation(g3.q);
      const Eigen::Vector3d svec = g3.scales();
      const Eigen::Matrix3d M = qr.R * svec.asDiagonal();
      const Eigen::Matrix<double, 2, 3> B = J * Wrot;
      const Eigen::Matrix3d sigma_w = M * M.transpose();

      const Eigen::Matrix<double, 2, 3> dB = 2.0 * P * B * sigma_w;
      const Eigen::Matrix3d dM = 2.0 * B.transpose() * P * B * M;
      const Eigen::Matrix<double, 2, 3> dJ = dB * Wrot.transpose();
      const Eigen::Matrix3d dW = J.transpose() * dB;

      // Gradient w.r.t. the camera-frame point.
      Eigen::Vector3d dx = J.transpose() * a.mu2d;
      dx.x() += dJ(0, 2) * (-K.fx * inv_z2);
      dx.y() += dJ(1, 2) * (-K.fy * inv_z2);
      dx.z() += dJ(0, 0) * (-K.fx * inv_z2) + dJ(1, 1) * (-K.fy * inv_z2) +
                dJ(0, 2) * (2.0 * K.fx * x.x() * inv_z2 / z) +
                dJ(1, 2) * (2.0 * K.fy * x.y() * inv_z2 / z);
      dx.z() += a.depth;

      grads.mu[s.index] = Wrot.transpose() * dx;

      // Left-perturbation twist: point path plus the rotation dependence of
      // the projected covariance.
      Twist& tw = pose_partial[static_cast<size_t>(si)];
      tw.v = dx;
      tw.omega = x.cross(dx);
      for (int k = 0; k < 3; ++k) {
        const Eigen::Matrix3d EkW = skew(Eigen::Vector3d::Unit(k)) * Wrot;
        tw.omega[k] += (dW.array() * EkW.array()).sum();
      }

      // M = R(q_hat) * diag(s)
      const Eigen::Matrix3d dR = dM * svec.asDiagonal();
      Eigen::Vector3d dlog;
      for (int k = 0; k < 3; ++k) {
        dlog[k] = qr.R.col(k).dot(dM.col(k)) * svec[k];
      }
      grads.log_scale[s.index] = dlog;
      grads.q[s.index] = quat_backward(dR, qr);
      grads.opacity_logit[s.index] = a.opl;
      grads.color[s.index] = a.color;
      grads.mu2d_norm[s.index] = a.mu2d.norm();
    }
  });

  for (const Twist& tw : pose_partial) {
    grads.pose.omega += tw.omega;
    grads.pose.v += tw.v;
  }
  return grads;
}

}  // namespace gsslam
