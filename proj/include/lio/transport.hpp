#pragma once

#include <string>
#include <vector>

#include "lio/datagen.hpp"
#include "lio/nn.hpp"
#include "lio/rng.hpp"
#include "lio/tensor.hpp"

namespace lio {

/// Parameter autoencoder: f_e compresses theta in R^D to a latent e in R^m,
/// f_d maps back.  Both are plain MLPs; no weight tying.
struct EncoderDecoder {
  Mlp encoder;
  Mlp decoder;
  int D = 0;
  int m = 0;
};

/// Basis-field networks V_b = f_v^b(gated source descriptor), each emitting a
/// full m x m matrix, plus the coefficient map c = f_c(gated descriptor
/// difference).  f_c is linear with no bias so c(0) = 0 holds exactly; the
/// field networks' output layers start at zero so the initial transport is
/// exactly the identity.
struct LieFieldBank {
  std::vector<Mlp> fields;  // B networks, d -> hidden -> m*m
  Tensor coeff_w;           // [d, B]; unused in raw_coeffs mode
  int B = 0;
  int m = 0;
  int d = 0;
};

/// Descriptor gate m(z) = Sigmoid(z W) * w applied elementwise; the source
/// domain's gate modulates both endpoints of a transport.
struct Gate {
  Tensor W;  // [d, d]
  Tensor w;  // [1, d]
};

/// Per-training-descriptor neighbor lists.
struct ChartIndex {
  int k = 0;
  std::vector<std::vector<int>> neighbors;
};

/// Ablation switches.  plain replaces the Lie transport with a direct MLP,
/// no_lie drops the matrix exponential, no_gate fixes m(z) = ones, no_chart
/// widens every neighborhood to all other domains.  raw_coeffs pins B = d and
/// uses the raw descriptor difference as coefficients.
struct OperatorVariant {
  bool plain = false;
  bool no_lie = false;
  bool no_gate = false;
  bool no_chart = false;
  bool raw_coeffs = false;
};

struct TransportOperator {
  EncoderDecoder enc_dec;
  LieFieldBank bank;
  Gate gate;
  Mlp plain_net;  // used only when variant.plain
  OperatorVariant variant;
  ChartIndex charts;
  int k = 5;

  int descriptor_dim() const { return bank.d; }
  int latent_dim() const { return enc_dec.m; }

  /// Trainable tensors in checkpoint order, paired with stable names.
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> trainable_params() const;
};

struct OperatorConfig {
  int D = 0;
  int d = 2;
  int m = 32;
  int B = 2;
  std::vector<int> encoder_hidden = {1024, 512, 128};
  int field_hidden = 32;
  std::vector<int> plain_hidden = {64, 64};
  int k = 5;
  OperatorVariant variant;
};

/// Fresh operator with the documented initialization: Glorot layers, zero
/// field output layers, zero gate W with w = 2 (a neutral gate), random
/// zero-bias coefficient map.
TransportOperator make_operator(const OperatorConfig& cfg, Rng& rng);

/// Same as make_operator with variant flags applied; rejects plain+no_lie.
TransportOperator make_ablation_operator(const OperatorConfig& cfg,
                                         const OperatorVariant& flags, Rng& rng);

/// (z_i * m(z_i), z_j * m(z_i)): both endpoints gated by the source.
/// Descriptors are [1,d] rows; differentiable through W and w.
std::pair<Tensor, Tensor> gate_descriptors(const Tensor& z_i, const Tensor& z_j,
                                           const Gate& gate, bool bypass = false);

/// Cascade of matrix exponentials applied to the latent row e [1,m]:
/// exp(c_B V_B) ... exp(c_1 V_1) e, ascending index, left-applied.
/// Variant no_lie applies the sum of scaled basis matrices as a single linear
/// map instead.
Tensor transport_latent(const Tensor& e, const Tensor& z_gated_i,
                        const Tensor& z_gated_j, const LieFieldBank& bank,
                        const OperatorVariant& variant);

/// Full parameter transport: encode, gate, move the latent, decode.
/// theta is a [1,D] row; returns a [1,D] row.
Tensor transport_params(const TransportOperator& op, const Tensor& theta,
                        const Tensor& z_i, const Tensor& z_j);

/// transport_params with the training-time chart restriction: source index i
/// must list j among its neighbors.
Tensor transport_params_checked(const TransportOperator& op, const Tensor& theta,
                                int i, int j, const std::vector<Tensor>& descriptors);

/// Directed k-NN neighborhoods over the training descriptors.
ChartIndex build_charts(const std::vector<Descriptor>& descriptors, int k);

/// Row [1,d] tensor view of a descriptor.
Tensor descriptor_row(const Descriptor& z);

/// Batched encoder/decoder application on [n,D] / [n,m].
Tensor encode(const TransportOperator& op, const Tensor& thetas);
Tensor decode(const TransportOperator& op, const Tensor& latents);

/// Checkpoint: manifest CSV (versioned header, hyperparameters, variant
/// flags, tensor ordering, charts) plus raw little-endian doubles.
void save_operator(const TransportOperator& op, const std::string& dir);
TransportOperator load_operator(const std::string& dir);

}  // namespace lio
