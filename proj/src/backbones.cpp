#include "crossdenoise/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "crossdenoise/common.hpp"
#include "crossdenoise/parallel.hpp"

namespace cdn {

namespace {

void validate_batch(const Backbone& model, std::span<const TrainSample> batch,
                    std::span<const double> weights) {
  check(weights.size() == batch.size(), "train_batch: weights misaligned with batch");
  for (double w : weights) check(w >= 0.0 && std::isfinite(w), "train_batch: negative weight");
  for (const auto& s : batch)
    check(s.user < model.num_users() && s.item < model.num_items(),
          "train_batch: sample index out of range");
}

// Sum per-chunk partial gradients into `total` in chunk order. Together with
// serial in-chunk accumulation this makes batch gradients independent of the
// worker count.
void merge_chunks(GradBuffers& total, const std::vector<GradBuffers>& partials) {
  for (const auto& part : partials)
    for (std::size_t t = 0; t < total.size(); ++t) {
      const auto& src = part[t];
      auto& dst = total[t];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
}

void zero_buffers(GradBuffers& bufs) {
  for (auto& b : bufs) std::fill(b.begin(), b.end(), 0.0);
}

GradBuffers shaped_like(const std::vector<NamedTensor>& tensors) {
  GradBuffers g(tensors.size());
  for (std::size_t t = 0; t < tensors.size(); ++t) g[t].assign(tensors[t].data->size(), 0.0);
  return g;
}

}  // namespace

std::vector<std::vector<double>> Backbone::snapshot() const {
  std::vector<std::vector<double>> snap;
  for (const auto& t : tensors()) snap.push_back(*t.data);
  return snap;
}

void Backbone::restore(const std::vector<std::vector<double>>& snap) {
  auto ts = tensors();
  check(snap.size() == ts.size(), "restore: tensor count mismatch");
  for (std::size_t t = 0; t < ts.size(); ++t) {
    check(snap[t].size() == ts[t].data->size(), "restore: tensor shape mismatch");
    *ts[t].data = snap[t];
  }
}

GradBuffers make_grad_buffers(const Backbone& model) {
  return shaped_like(model.tensors());
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gmf: return "gmf";
    case ModelKind::neumf: return "neumf";
    case ModelKind::cdae: return "cdae";
  }
  return "gmf";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "gmf") return ModelKind::gmf;
  if (name == "neumf") return ModelKind::neumf;
  if (name == "cdae") return ModelKind::cdae;
  throw ContractError("unknown model kind: " + name);
}

// ---------------------------------------------------------------- GMF

GmfModel::GmfModel(std::uint32_t num_users, std::uint32_t num_items, int dim)
    : users_(num_users), items_(num_items), dim_(dim) {
  check(num_users > 0 && num_items > 0 && dim > 0, "GmfModel: bad dimensions");
  params.user_embeddings = EmbeddingTable(static_cast<int>(num_users), dim);
  params.item_embeddings = EmbeddingTable(static_cast<int>(num_items), dim);
  params.output_weights.assign(dim, 0.0);
}

void GmfModel::init(Rng& rng) {
  init_embedding(params.user_embeddings, rng);
  init_embedding(params.item_embeddings, rng);
  for (auto& v : params.output_weights) v = rng.normal(0.0, 0.01);
}

std::vector<NamedTensor> GmfModel::tensors() {
  return {{"user_embeddings", &params.user_embeddings.values},
          {"item_embeddings", &params.item_embeddings.values},
          {"output_weights", &params.output_weights}};
}

double GmfModel::forward(std::uint32_t user, std::uint32_t item) const {
  check(user < users_ && item < items_, "gmf_forward: index out of range");
  const double* p = params.user_embeddings.row(static_cast<int>(user));
  const double* q = params.item_embeddings.row(static_cast<int>(item));
  double s = 0.0;
  for (int d = 0; d < dim_; ++d) s += params.output_weights[d] * p[d] * q[d];
  return sigmoid(s);
}

BatchLoss GmfModel::train_batch(std::span<const TrainSample> batch,
                                std::span<const double> weights, GradBuffers* grads,
                                const EpochContext&, int workers,
                                std::size_t chunk_size) const {
  validate_batch(*this, batch, weights);
  BatchLoss out;
  out.sample_loss.assign(batch.size(), 0.0);
  if (batch.empty()) return out;

  auto chunks = make_chunks(static_cast<std::int64_t>(batch.size()),
                            static_cast<std::int64_t>(chunk_size));
  std::vector<double> chunk_loss(chunks.size(), 0.0);
  std::vector<GradBuffers> partials;
  if (grads) partials.assign(chunks.size(), shaped_like(const_cast<GmfModel*>(this)->tensors()));

  double inv_b = 1.0 / static_cast<double>(batch.size());
  const double* h = params.output_weights.data();
  parallel_for(static_cast<std::int64_t>(chunks.size()), workers, [&](std::int64_t c) {
    auto [b0, b1] = chunks[static_cast<std::size_t>(c)];
    double loss_sum = 0.0;
    double* du = grads ? partials[c][0].data() : nullptr;
    double* di = grads ? partials[c][1].data() : nullptr;
    double* dh = grads ? partials[c][2].data() : nullptr;
    for (std::int64_t j = b0; j < b1; ++j) {
      const auto& s = batch[static_cast<std::size_t>(j)];
      const double* p = params.user_embeddings.row(static_cast<int>(s.user));
      const double* q = params.item_embeddings.row(static_cast<int>(s.item));
      double logit = 0.0;
      for (int d = 0; d < dim_; ++d) logit += h[d] * p[d] * q[d];
      double y_hat = sigmoid(logit);
      double y = s.label;
      double loss = bce_loss(y_hat, y);
      out.sample_loss[static_cast<std::size_t>(j)] = loss;
      double w = weights[static_cast<std::size_t>(j)];
      loss_sum += w * loss;
      if (grads) {
        double g = w * bce_logit_grad(y_hat, y) * inv_b;
        double* dp = du + std::size_t(s.user) * dim_;
        double* dq = di + std::size_t(s.item) * dim_;
        for (int d = 0; d < dim_; ++d) {
          dh[d] += g * p[d] * q[d];
          dp[d] += g * h[d] * q[d];
          dq[d] += g * h[d] * p[d];
        }
      }
    }
    chunk_loss[static_cast<std::size_t>(c)] = loss_sum;
  });

  double total = 0.0;
  for (double v : chunk_loss) total += v;
  out.weighted_mean = total * inv_b;
  if (grads) {
    zero_buffers(*grads);
    merge_chunks(*grads, partials);
  }
  return out;
}

void GmfModel::score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                           std::span<const std::uint32_t>, std::span<double> out) const {
  check(out.size() == items.size(), "score_items: output size mismatch");
  const double* p = params.user_embeddings.row(static_cast<int>(user));
  const double* h = params.output_weights.data();
  for (std::size_t j = 0; j < items.size(); ++j) {
    const double* q = params.item_embeddings.row(static_cast<int>(items[j]));
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) s += h[d] * p[d] * q[d];
    out[j] = sigmoid(s);
  }
}

std::unique_ptr<Backbone> GmfModel::clone() const { return std::make_unique<GmfModel>(*this); }

// ---------------------------------------------------------------- NeuMF

NeuMfModel::NeuMfModel(std::uint32_t num_users, std::uint32_t num_items, int dim)
    : users_(num_users), items_(num_items), dim_(dim) {
  check(num_users > 0 && num_items > 0, "NeuMfModel: bad dimensions");
  check(dim >= 2 && dim % 2 == 0, "NeuMfModel: embedding dim must be even and >= 2");
  params.gmf_user = EmbeddingTable(static_cast<int>(num_users), dim);
  params.gmf_item = EmbeddingTable(static_cast<int>(num_items), dim);
  params.mlp_user = EmbeddingTable(static_cast<int>(num_users), dim);
  params.mlp_item = EmbeddingTable(static_cast<int>(num_items), dim);
  params.tower = {DenseLayer(2 * dim, 2 * dim, Activation::relu),
                  DenseLayer(2 * dim, dim, Activation::relu),
                  DenseLayer(dim, dim / 2, Activation::relu)};
  params.fusion.assign(dim + dim / 2, 0.0);
}

void NeuMfModel::init(Rng& rng) {
  init_embedding(params.gmf_user, rng);
  init_embedding(params.gmf_item, rng);
  init_embedding(params.mlp_user, rng);
  init_embedding(params.mlp_item, rng);
  for (auto& layer : params.tower) init_dense(layer, rng);
  for (auto& v : params.fusion) v = rng.normal(0.0, 0.01);
}

std::vector<NamedTensor> NeuMfModel::tensors() {
  return {{"gmf_user", &params.gmf_user.values},
          {"gmf_item", &params.gmf_item.values},
          {"mlp_user", &params.mlp_user.values},
          {"mlp_item", &params.mlp_item.values},
          {"tower0_weight", &params.tower[0].weight},
          {"tower0_bias", &params.tower[0].bias},
          {"tower1_weight", &params.tower[1].weight},
          {"tower1_bias", &params.tower[1].bias},
          {"tower2_weight", &params.tower[2].weight},
          {"tower2_bias", &params.tower[2].bias},
          {"fusion", &params.fusion}};
}

namespace {

// per-thread forward/backward scratch for one NeuMF sample
struct NeuMfWork {
  std::vector<double> x0, x1, x2, x3;      // tower activations
  std::vector<double> dx0, dx1, dx2, dx3;  // tower input gradients
  explicit NeuMfWork(int dim)
      : x0(2 * dim), x1(2 * dim), x2(dim), x3(dim / 2),
        dx0(2 * dim), dx1(2 * dim), dx2(dim), dx3(dim / 2) {}
};

}  // namespace

double NeuMfModel::forward(std::uint32_t user, std::uint32_t item) const {
  check(user < users_ && item < items_, "neumf_forward: index out of range");
  NeuMfWork w(dim_);
  const double* pm = params.mlp_user.row(static_cast<int>(user));
  const double* qm = params.mlp_item.row(static_cast<int>(item));
  std::copy(pm, pm + dim_, w.x0.begin());
  std::copy(qm, qm + dim_, w.x0.begin() + dim_);
  dense_forward(params.tower[0], w.x0, w.x1);
  dense_forward(params.tower[1], w.x1, w.x2);
  dense_forward(params.tower[2], w.x2, w.x3);

  const double* pg = params.gmf_user.row(static_cast<int>(user));
  const double* qg = params.gmf_item.row(static_cast<int>(item));
  double s = 0.0;
  for (int d = 0; d < dim_; ++d) s += params.fusion[d] * pg[d] * qg[d];
  for (int d = 0; d < dim_ / 2; ++d) s += params.fusion[dim_ + d] * w.x3[d];
  return sigmoid(s);
}

BatchLoss NeuMfModel::train_batch(std::span<const TrainSample> batch,
                                  std::span<const double> weights, GradBuffers* grads,
                                  const EpochContext&, int workers,
                                  std::size_t chunk_size) const {
  validate_batch(*this, batch, weights);
  BatchLoss out;
  out.sample_loss.assign(batch.size(), 0.0);
  if (batch.empty()) return out;

  auto chunks = make_chunks(static_cast<std::int64_t>(batch.size()),
                            static_cast<std::int64_t>(chunk_size));
  std::vector<double> chunk_loss(chunks.size(), 0.0);
  std::vector<GradBuffers> partials;
  if (grads)
    partials.assign(chunks.size(), shaped_like(const_cast<NeuMfModel*>(this)->tensors()));

  double inv_b = 1.0 / static_cast<double>(batch.size());
  int half = dim_ / 2;
  parallel_for(static_cast<std::int64_t>(chunks.size()), workers, [&](std::int64_t c) {
    auto [b0, b1] = chunks[static_cast<std::size_t>(c)];
    NeuMfWork w(dim_);
    double loss_sum = 0.0;
    GradBuffers* part = grads ? &partials[static_cast<std::size_t>(c)] : nullptr;
    for (std::int64_t j = b0; j < b1; ++j) {
      const auto& s = batch[static_cast<std::size_t>(j)];
      const double* pg = params.gmf_user.row(static_cast<int>(s.user));
      const double* qg = params.gmf_item.row(static_cast<int>(s.item));
      const double* pm = params.mlp_user.row(static_cast<int>(s.user));
      const double* qm = params.mlp_item.row(static_cast<int>(s.item));
      std::copy(pm, pm + dim_, w.x0.begin());
      std::copy(qm, qm + dim_, w.x0.begin() + dim_);
      dense_forward(params.tower[0], w.x0, w.x1);
      dense_forward(params.tower[1], w.x1, w.x2);
      dense_forward(params.tower[2], w.x2, w.x3);
      double logit = 0.0;
      for (int d = 0; d < dim_; ++d) logit += params.fusion[d] * pg[d] * qg[d];
      for (int d = 0; d < half; ++d) logit += params.fusion[dim_ + d] * w.x3[d];
      double y_hat = sigmoid(logit);
      double y = s.label;
      out.sample_loss[static_cast<std::size_t>(j)] = bce_loss(y_hat, y);
      double wj = weights[static_cast<std::size_t>(j)];
      loss_sum += wj * out.sample_loss[static_cast<std::size_t>(j)];
      if (!part) continue;

      double g = wj * bce_logit_grad(y_hat, y) * inv_b;
      auto& p = *part;
      double* d_gmf_u = p[0].data() + std::size_t(s.user) * dim_;
      double* d_gmf_i = p[1].data() + std::size_t(s.item) * dim_;
      double* d_mlp_u = p[2].data() + std::size_t(s.user) * dim_;
      double* d_mlp_i = p[3].data() + std::size_t(s.item) * dim_;
      double* d_fusion = p[10].data();

      std::fill(w.dx3.begin(), w.dx3.end(), 0.0);
      for (int d = 0; d < dim_; ++d) {
        d_fusion[d] += g * pg[d] * qg[d];
        double dz = g * params.fusion[d];
        d_gmf_u[d] += dz * qg[d];
        d_gmf_i[d] += dz * pg[d];
      }
      for (int d = 0; d < half; ++d) {
        d_fusion[dim_ + d] += g * w.x3[d];
        w.dx3[d] = g * params.fusion[dim_ + d];
      }
      std::fill(w.dx2.begin(), w.dx2.end(), 0.0);
      dense_backward(params.tower[2], w.x2, w.x3, w.dx3, p[8], p[9], w.dx2);
      std::fill(w.dx1.begin(), w.dx1.end(), 0.0);
      dense_backward(params.tower[1], w.x1, w.x2, w.dx2, p[6], p[7], w.dx1);
      std::fill(w.dx0.begin(), w.dx0.end(), 0.0);
      dense_backward(params.tower[0], w.x0, w.x1, w.dx1, p[4], p[5], w.dx0);
      for (int d = 0; d < dim_; ++d) {
        d_mlp_u[d] += w.dx0[d];
        d_mlp_i[d] += w.dx0[dim_ + d];
      }
    }
    chunk_loss[static_cast<std::size_t>(c)] = loss_sum;
  });

  double total = 0.0;
  for (double v : chunk_loss) total += v;
  out.weighted_mean = total * inv_b;
  if (grads) {
    zero_buffers(*grads);
    merge_chunks(*grads, partials);
  }
  return out;
}

void NeuMfModel::score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                             std::span<const std::uint32_t>, std::span<double> out) const {
  check(out.size() == items.size(), "score_items: output size mismatch");
  for (std::size_t j = 0; j < items.size(); ++j) out[j] = forward(user, items[j]);
}

std::unique_ptr<Backbone> NeuMfModel::clone() const {
  return std::make_unique<NeuMfModel>(*this);
}

// ---------------------------------------------------------------- CDAE

CdaeModel::CdaeModel(std::uint32_t num_users, std::uint32_t num_items, int dim,
                     double corruption_rate)
    : users_(num_users), items_(num_items), dim_(dim) {
  check(num_users > 0 && num_items > 0 && dim > 0, "CdaeModel: bad dimensions");
  check(corruption_rate >= 0.0 && corruption_rate < 1.0, "CdaeModel: corruption in [0, 1)");
  params.encoder = DenseLayer(static_cast<int>(num_items), dim, Activation::sigmoid);
  params.user_node = EmbeddingTable(static_cast<int>(num_users), dim);
  params.decoder = DenseLayer(dim, static_cast<int>(num_items), Activation::sigmoid);
  params.corruption_rate = corruption_rate;
}

void CdaeModel::init(Rng& rng) {
  init_dense(params.encoder, rng);
  init_embedding(params.user_node, rng);
  init_dense(params.decoder, rng);
}

std::vector<NamedTensor> CdaeModel::tensors() {
  return {{"encoder_weight", &params.encoder.weight},
          {"encoder_bias", &params.encoder.bias},
          {"user_node", &params.user_node.values},
          {"decoder_weight", &params.decoder.weight},
          {"decoder_bias", &params.decoder.bias}};
}

void CdaeModel::forward_row(std::uint32_t user, std::span<const std::uint32_t> input_items,
                            double input_value, std::span<const std::uint32_t> score_items,
                            std::span<double> hidden_out, std::span<double> scores_out) const {
  check(user < users_, "cdae_forward: user out of range");
  check(static_cast<int>(hidden_out.size()) == dim_, "cdae_forward: hidden size mismatch");
  check(scores_out.size() == score_items.size(), "cdae_forward: score size mismatch");

  // sparse encoder pass over the active input columns
  for (int d = 0; d < dim_; ++d) hidden_out[d] = params.encoder.bias[d];
  std::size_t n_cols = items_;
  for (std::uint32_t col : input_items) {
    const double* wcol = params.encoder.weight.data() + col;
    for (int d = 0; d < dim_; ++d) hidden_out[d] += wcol[std::size_t(d) * n_cols] * input_value;
  }
  for (int d = 0; d < dim_; ++d) hidden_out[d] = sigmoid(hidden_out[d]);

  const double* v_u = params.user_node.row(static_cast<int>(user));
  for (std::size_t j = 0; j < score_items.size(); ++j) {
    std::uint32_t i = score_items[j];
    const double* wrow = params.decoder.weight.data() + std::size_t(i) * dim_;
    double s = params.decoder.bias[i];
    for (int d = 0; d < dim_; ++d) s += wrow[d] * (hidden_out[d] + v_u[d]);
    scores_out[j] = sigmoid(s);
  }
}

BatchLoss CdaeModel::train_batch(std::span<const TrainSample> batch,
                                 std::span<const double> weights, GradBuffers* grads,
                                 const EpochContext& ctx, int workers,
                                 std::size_t chunk_size) const {
  validate_batch(*this, batch, weights);
  check(ctx.user_positive_items != nullptr, "cdae train_batch: needs user positive lists");
  BatchLoss out;
  out.sample_loss.assign(batch.size(), 0.0);
  if (batch.empty()) return out;

  // contiguous user groups; the epoch stream guarantees this layout
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t j = 0; j < batch.size();) {
    std::size_t e = j + 1;
    while (e < batch.size() && batch[e].user == batch[j].user) ++e;
    groups.emplace_back(j, e);
    j = e;
  }
  // chunks cover whole groups and roughly chunk_size samples each
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  // group index ranges
  for (std::size_t g = 0; g < groups.size();) {
    std::size_t e = g;
    std::size_t samples = 0;
    while (e < groups.size() && (samples == 0 || samples + (groups[e].second - groups[e].first) <=
                                                     chunk_size)) {
      samples += groups[e].second - groups[e].first;
      ++e;
    }
    chunks.emplace_back(g, e);
    g = e;
  }

  std::vector<double> chunk_loss(chunks.size(), 0.0);
  std::vector<GradBuffers> partials;
  if (grads) partials.assign(chunks.size(), shaped_like(const_cast<CdaeModel*>(this)->tensors()));

  double inv_b = 1.0 / static_cast<double>(batch.size());
  double rate = params.corruption_rate;
  double rescale = 1.0 / (1.0 - rate);
  const auto& positives = *ctx.user_positive_items;

  parallel_for(static_cast<std::int64_t>(chunks.size()), workers, [&](std::int64_t c) {
    auto [g0, g1] = chunks[static_cast<std::size_t>(c)];
    GradBuffers* part = grads ? &partials[static_cast<std::size_t>(c)] : nullptr;
    std::vector<double> hidden(dim_), scores;
    std::vector<double> dz(dim_), dpre(dim_);
    std::vector<std::uint32_t> kept;
    double loss_sum = 0.0;

    static const std::vector<std::uint32_t> kNoItems;
    for (std::size_t g = g0; g < g1; ++g) {
      auto [j0, j1] = groups[g];
      std::uint32_t u = batch[j0].user;
      const auto& pos = u < positives.size() ? positives[u] : kNoItems;

      kept.clear();
      double value = 1.0;
      if (ctx.training && rate > 0.0) {
        Rng mask_rng(derive_seed(ctx.run_seed, Stream::corruption,
                                 static_cast<std::uint64_t>(ctx.epoch), u));
        for (std::uint32_t i : pos)
          if (!mask_rng.bernoulli(rate)) kept.push_back(i);
        value = rescale;
      } else {
        kept.assign(pos.begin(), pos.end());
      }

      std::size_t n_s = j1 - j0;
      scores.resize(n_s);
      std::vector<std::uint32_t> sample_items(n_s);
      for (std::size_t j = j0; j < j1; ++j) sample_items[j - j0] = batch[j].item;
      forward_row(u, kept, value, sample_items, hidden, scores);

      if (part) std::fill(dz.begin(), dz.end(), 0.0);
      const double* v_u = params.user_node.row(static_cast<int>(u));
      for (std::size_t j = j0; j < j1; ++j) {
        double y_hat = scores[j - j0];
        double y = batch[j].label;
        out.sample_loss[j] = bce_loss(y_hat, y);
        double wj = weights[j];
        loss_sum += wj * out.sample_loss[j];
        if (!part) continue;
        double gsc = wj * bce_logit_grad(y_hat, y) * inv_b;
        std::uint32_t i = batch[j].item;
        double* d_dec_w = (*part)[3].data() + std::size_t(i) * dim_;
        const double* wrow = params.decoder.weight.data() + std::size_t(i) * dim_;
        for (int d = 0; d < dim_; ++d) {
          d_dec_w[d] += gsc * (hidden[d] + v_u[d]);
          dz[d] += gsc * wrow[d];
        }
        (*part)[4][i] += gsc;
      }
      if (!part) continue;

      double* d_vu = (*part)[2].data() + std::size_t(u) * dim_;
      for (int d = 0; d < dim_; ++d) {
        d_vu[d] += dz[d];
        dpre[d] = dz[d] * hidden[d] * (1.0 - hidden[d]);
        (*part)[1][d] += dpre[d];
      }
      double* d_enc = (*part)[0].data();
      for (std::uint32_t col : kept)
        for (int d = 0; d < dim_; ++d) d_enc[std::size_t(d) * items_ + col] += dpre[d] * value;
    }
    chunk_loss[static_cast<std::size_t>(c)] = loss_sum;
  });

  double total = 0.0;
  for (double v : chunk_loss) total += v;
  out.weighted_mean = total * inv_b;
  if (grads) {
    zero_buffers(*grads);
    merge_chunks(*grads, partials);
  }
  return out;
}

void CdaeModel::score_items(std::uint32_t user, std::span<const std::uint32_t> items,
                            std::span<const std::uint32_t> user_train_items,
                            std::span<double> out) const {
  std::vector<double> hidden(dim_);
  forward_row(user, user_train_items, 1.0, items, hidden, out);
}

std::unique_ptr<Backbone> CdaeModel::clone() const { return std::make_unique<CdaeModel>(*this); }

// ---------------------------------------------------------------- factory and serialization

std::unique_ptr<Backbone> make_backbone(ModelKind kind, std::uint32_t num_users,
                                        std::uint32_t num_items, int dim,
                                        double cdae_corruption) {
  switch (kind) {
    case ModelKind::gmf: return std::make_unique<GmfModel>(num_users, num_items, dim);
    case ModelKind::neumf: return std::make_unique<NeuMfModel>(num_users, num_items, dim);
    case ModelKind::cdae:
      return std::make_unique<CdaeModel>(num_users, num_items, dim, cdae_corruption);
  }
  throw ContractError("make_backbone: unknown kind");
}

namespace {

constexpr char kModelMagic[8] = {'C', 'D', 'N', 'M', 'D', 'L', '0', '1'};

template <class T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_model(const Backbone& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), "save_model: cannot open " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  write_raw(out, static_cast<std::uint32_t>(model.kind()));
  write_raw(out, model.num_users());
  write_raw(out, model.num_items());
  write_raw(out, static_cast<std::uint32_t>(model.dim()));
  double corruption = 0.0;
  if (const auto* cdae = dynamic_cast<const CdaeModel*>(&model))
    corruption = cdae->params.corruption_rate;
  write_raw(out, corruption);

  auto ts = model.tensors();
  write_raw(out, static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    write_raw(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_raw(out, static_cast<std::uint64_t>(t.data->size()));
    out.write(reinterpret_cast<const char*>(t.data->data()),
              static_cast<std::streamsize>(t.data->size() * sizeof(double)));
  }
  check(static_cast<bool>(out), "save_model: write failed for " + path.string());
}

std::unique_ptr<Backbone> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), "load_model: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  check(std::memcmp(magic, kModelMagic, sizeof(magic)) == 0, "load_model: bad magic");
  std::uint32_t kind_u = 0, users = 0, items = 0, dim = 0, count = 0;
  double corruption = 0.0;
  read_raw(in, kind_u);
  read_raw(in, users);
  read_raw(in, items);
  read_raw(in, dim);
  read_raw(in, corruption);
  auto model = make_backbone(static_cast<ModelKind>(kind_u), users, items,
                             static_cast<int>(dim), corruption);
  read_raw(in, count);
  auto ts = model->tensors();
  check(count == ts.size(), "load_model: tensor count mismatch");
  for (auto& t : ts) {
    std::uint32_t name_len = 0;
    read_raw(in, name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    check(name == t.name, "load_model: tensor name mismatch: " + name);
    std::uint64_t n = 0;
    read_raw(in, n);
    check(n == t.data->size(), "load_model: tensor size mismatch: " + name);
    in.read(reinterpret_cast<char*>(t.data->data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  check(static_cast<bool>(in), "load_model: truncated file");
  return model;
}

}  // namespace cdn
