#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lio/tensor.hpp"

namespace lio {

/// Continuous domain descriptor z.
using Descriptor = std::vector<double>;

/// One dataset shard: points, binary labels, and the descriptor the model
/// sees for this domain (which may be an imperfect view of the generating z).
struct Domain {
  int id = -1;
  Descriptor descriptor;
  Tensor inputs;            // [n, 2]
  std::vector<int> labels;  // values in {0, 1}
};

enum class ImperfectionKind { none, noisy, redundant, incomplete };

struct ImperfectionSpec {
  ImperfectionKind kind = ImperfectionKind::none;
  int noise_dims = 0;       // noisy: appended uniform coordinates, 1..5
  int projection_dim = 8;   // redundant: rows of the projection
  int drop_count = 0;       // incomplete: coordinates deleted from the 8-dim view
  std::uint64_t seed = 0;
};

ImperfectionKind imperfection_kind_from_string(const std::string& s);
std::string to_string(ImperfectionKind k);

enum class ScaleLaw { compound, linear };

struct MoonParams {
  int n_per_class = 500;
  double noise_std = 0.1;
  ScaleLaw scale_law = ScaleLaw::compound;
};

struct Box {
  double lo[2] = {0.0, 0.0};
  double hi[2] = {10.0, 10.0};
};

/// Two interleaving half-circles with Gaussian jitter; the lower moon is
/// class 0, the upper class 1.  Rows: all of class 0, then all of class 1.
void make_base_moons(int n_per_class, double noise_std, std::uint64_t seed,
                     Tensor& inputs, std::vector<int>& labels);

/// Base moons scaled by 1.1 per unit of z[0] (compounding) and rotated 18
/// degrees counterclockwise per unit of z[1], both about the centroid of the
/// combined base cloud.  The same seed reuses the same base cloud, so domains
/// of one experiment differ only by the transformation.
Domain make_domain(const Descriptor& z, std::uint64_t seed,
                   const MoonParams& params = {});

struct DescriptorSets {
  std::vector<Descriptor> train;
  std::vector<Descriptor> test_random;
  std::vector<Descriptor> test_mesh;
};

/// Train and random-test descriptors uniform in the box; mesh is the regular
/// mesh_per_axis x mesh_per_axis grid over the box (0 disables the mesh).
DescriptorSets sample_descriptor_sets(int n_train, int n_test, int mesh_per_axis,
                                      const Box& bounds, std::uint64_t seed);

struct ImperfectionResult {
  std::vector<Descriptor> descriptors;
  Tensor projection;               // redundant/incomplete: the matrix A, rows x 2
  std::vector<int> dropped;        // incomplete: deleted coordinate positions
};

/// Imperfect view of a descriptor list: append noise coordinates, replace by a
/// full-column-rank random projection, or project to 8 dims then delete fixed
/// random positions (the same positions for every descriptor).
std::vector<Descriptor> apply_imperfection(const std::vector<Descriptor>& descriptors,
                                           const ImperfectionSpec& spec);
ImperfectionResult apply_imperfection_full(const std::vector<Descriptor>& descriptors,
                                           const ImperfectionSpec& spec);

struct DatasetConfig {
  int n_train = 50;
  int n_test = 150;
  int mesh_per_axis = 11;
  Box bounds;
  MoonParams moons;
  ImperfectionSpec imperfection;
  std::uint64_t seed = 1;
};

struct Dataset {
  std::vector<Domain> train;
  std::vector<Domain> test_random;
  std::vector<Domain> test_mesh;
  std::vector<Descriptor> clean_train;  // generating coordinates, pre-imperfection
  std::vector<Descriptor> clean_test_random;
  std::vector<Descriptor> clean_test_mesh;
  ImperfectionResult imperfection_detail;
  DatasetConfig config;

  std::vector<const Domain*> all_test() const;
  int descriptor_dim() const;
};

/// Full pipeline: sample descriptor sets, apply the imperfection to the model-
/// visible descriptors, and build every domain's data from the clean z.
Dataset make_dataset(const DatasetConfig& cfg);

/// Directory layout: domain_<id>.csv per domain (x1,x2,label rows),
/// descriptors.csv (id, split, z1..zd), manifest.json with the seed and
/// config hash.  Values round-trip bit-exactly at 17 significant digits.
void write_dataset(const Dataset& ds, const std::string& dir,
                   const std::string& config_hash);
Dataset load_dataset(const std::string& dir);

}  // namespace lio
