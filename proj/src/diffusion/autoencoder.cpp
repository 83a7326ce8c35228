#include "ptlab/diffusion/autoencoder.hpp"

#include "ptlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptlab::diffusion {

using nncore::Shape;
using nncore::Tensor;

namespace {

Tensor stack_images(std::span<const data::Image> images, std::size_t width) {
  Tensor x(Shape{images.size(), width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].values.size() != width) throw std::invalid_argument("image size does not match model input width");
    std::copy(images[i].values.begin(), images[i].values.end(), x.row(i).begin());
  }
  return x;
}

double reconstruction_error(const Tensor& x, const Tensor& rec) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    total += std::abs(static_cast<double>(std::clamp(rec[i], 0.0f, 1.0f)) - x[i]);
  }
  return x.numel() ? total / static_cast<double>(x.numel()) : 0.0;
}

}  // namespace

AutoencoderFit train_autoencoder(std::span<const data::Image> images, const AutoencoderConfig& config) {
  AutoencoderFit fit;
  if (config.mode == AutoencoderMode::identity) return fit;
  if (images.empty()) throw std::invalid_argument("train_autoencoder: no images");

  const std::size_t width = images[0].values.size();
  const std::size_t k = config.latent_width;
  if (k == 0 || k > width) throw std::invalid_argument("latent width must be in [1, image width]");

  const Tensor x = stack_images(images, width);
  Eigen::MatrixXd xd = x.matrix().cast<double>();
  Eigen::RowVectorXd mean = xd.colwise().mean();
  xd.rowwise() -= mean;
  Eigen::MatrixXd cov = (xd.transpose() * xd) / static_cast<double>(images.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw TrainingError("autoencoder eigendecomposition failed");

  Tensor enc(Shape{width, k}), dec(Shape{k, width}), enc_bias(Shape{k}), dec_bias(Shape{width});
  const auto& vecs = solver.eigenvectors();
  const auto& vals = solver.eigenvalues();  // ascending
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::Index col = static_cast<Eigen::Index>(width - 1 - j);
    Eigen::VectorXd u = vecs.col(col);
    // Fix the sign so the largest-magnitude coordinate is positive.
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    const double sd = std::sqrt(std::max(vals(col), 1e-10));
    double bias = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      enc.at(i, j) = static_cast<float>(u(i) / sd);
      dec.at(j, i) = static_cast<float>(u(i) * sd);
      bias -= mean(i) * u(i) / sd;
    }
    enc_bias[j] = static_cast<float>(bias);
  }
  for (std::size_t i = 0; i < width; ++i) dec_bias[i] = static_cast<float>(mean(i));

  fit.params.add(kEncoderWeight, std::move(enc), false);
  fit.params.add(kEncoderBias, std::move(enc_bias), false);
  fit.params.add(kDecoderWeight, std::move(dec), false);
  fit.params.add(kDecoderBias, std::move(dec_bias), false);

  Tensor z(Shape{images.size(), k});
  z.matrix() = x.matrix() * fit.params.get(kEncoderWeight).matrix();
  z.matrix().rowwise() += fit.params.get(kEncoderBias).matrix().row(0);
  Tensor rec(Shape{images.size(), width});
  rec.matrix() = z.matrix() * fit.params.get(kDecoderWeight).matrix();
  rec.matrix().rowwise() += fit.params.get(kDecoderBias).matrix().row(0);
  fit.mean_abs_error = reconstruction_error(x, rec);
  if (fit.mean_abs_error > config.max_mean_abs_error) {
    throw TrainingError("autoencoder reconstruction error " + std::to_string(fit.mean_abs_error) +
                        " exceeds threshold " + std::to_string(config.max_mean_abs_error));
  }
  return fit;
}

Tensor encode_images(const ModelBundle& bundle, std::span<const data::Image> images) {
  const std::size_t width = bundle.config.image_width();
  Tensor x = stack_images(images, width);
  if (bundle.config.autoencoder == AutoencoderMode::identity) return x;
  const Tensor& w = bundle.params.get(kEncoderWeight);
  Tensor z(Shape{images.size(), w.cols()});
  if (images.empty()) return z;
  z.matrix().noalias() = x.matrix() * w.matrix();
  z.matrix().rowwise() += bundle.params.get(kEncoderBias).matrix().row(0);
  return z;
}

std::vector<data::Image> decode_latents(const ModelBundle& bundle, const Tensor& latents) {
  const std::size_t n = latents.rank() == 0 ? 0 : latents.rows();
  Tensor x;
  if (bundle.config.autoencoder == AutoencoderMode::identity) {
    x = latents;
  } else {
    const Tensor& w = bundle.params.get(kDecoderWeight);
    x = Tensor(Shape{n, w.cols()});
    if (n) {
      x.matrix().noalias() = latents.matrix() * w.matrix();
      x.matrix().rowwise() += bundle.params.get(kDecoderBias).matrix().row(0);
    }
  }
  const bool clamp = bundle.config.backend == "shapes16";
  std::vector<data::Image> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].shape = bundle.config.image_shape;
    auto row = x.row(i);
    out[i].values.assign(row.begin(), row.end());
    if (clamp) {
      for (auto& v : out[i].values) v = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return out;
}

double mean_abs_reconstruction_error(const ModelBundle& bundle, std::span<const data::Image> images) {
  if (images.empty()) return 0.0;
  const Tensor x = stack_images(images, bundle.config.image_width());
  const auto rec = decode_latents(bundle, encode_images(bundle, images));
  double total = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    for (std::size_t j = 0; j < rec[i].values.size(); ++j) total += std::abs(rec[i].values[j] - x.at(i, j));
  }
  return total / static_cast<double>(x.numel());
}

}  // namespace ptlab::diffusion
