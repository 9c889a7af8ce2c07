#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "restinfer/request.hpp"

namespace restinfer {

enum class MutationOperatorKind {
  AddRoute,
  RemoveRoute,
  ModifyRoute,
  ResetRoute,
  AddParameter,
  RemoveParameter,
  ModifyParameter,
  ModifyParameterName,
  ModifyParameterValue,
  ResetParameter,
};

struct MutationOperator {
  MutationOperatorKind kind = MutationOperatorKind::AddRoute;

  std::string name() const;
  /// Mask token the operator introduces; nullopt for the two remove operators.
  std::optional<MaskTokenKind> token() const;

  friend bool operator==(const MutationOperator&, const MutationOperator&) = default;
};

/// The ten operators in fixed declaration order.
const std::array<MutationOperator, 10>& all_operators();
std::optional<MutationOperator> operator_by_name(const std::string& name);

struct EmptySeedList : std::runtime_error {
  explicit EmptySeedList(const std::string& what) : std::runtime_error(what) {}
};

struct OperatorNotApplicable : std::runtime_error {
  explicit OperatorNotApplicable(const std::string& what) : std::runtime_error(what) {}
};

/// Valid unique requests in insertion order, plus the canonical keys of
/// requests already found invalid (never retried).
class SeedList {
 public:
  /// Inserts unless the canonical key is already present; returns whether
  /// the seed was added.
  bool add_seed(const ApiRequest& req);
  bool contains(const std::string& key) const { return keys_.count(key) > 0; }

  void mark_invalid(const std::string& key) { invalid_.insert(key); }
  bool is_invalid(const std::string& key) const { return invalid_.count(key) > 0; }

  const std::vector<ApiRequest>& seeds() const { return seeds_; }
  std::size_t size() const { return seeds_.size(); }
  bool empty() const { return seeds_.empty(); }

  /// Unique generalized paths in first-seen order.
  std::vector<std::string> routes() const;

 private:
  std::vector<ApiRequest> seeds_;
  std::set<std::string> keys_;
  std::set<std::string> invalid_;
};

/// Deterministic random source. pick_index uses rejection sampling so the
/// draw sequence is identical across platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform index in [0, n); n must be positive.
  std::size_t pick_index(std::size_t n);

 private:
  std::mt19937_64 gen_;
};

enum class SelectionMode { RandomSeed, RandomRoute };

std::optional<SelectionMode> parse_selection_mode(const std::string& s);

/// random-seed: uniform over seeds. random-route: uniform over routes, then
/// uniform over that route's seeds.
ApiRequest select_seed(const SeedList& list, SelectionMode mode,
                       const std::vector<std::string>& route_pool, Rng& rng);

struct MaskedRequest {
  ApiRequest base;
  MutationOperator op;
  std::string rendered_template;  // relative path+query with the token embedded
  std::size_t mask_site = 0;      // affected segment or pair index
};

bool is_applicable(const MutationOperator& op, const ApiRequest& seed);

/// Deterministic masking at an explicit site (segment index for route
/// operators, pair index for parameter operators). Operators with a fixed
/// site ignore it.
MaskedRequest apply_mask_at(const ApiRequest& seed, const MutationOperator& op, std::size_t site);

/// Masking with the site chosen uniformly among eligible sites.
MaskedRequest apply_mask(const ApiRequest& seed, const MutationOperator& op, Rng& rng);

/// Expand model-proposed values into concrete requests. Route tokens gain
/// the automatic candidate `1`; pair values must contain `=`; duplicates by
/// canonical key are dropped; remove operators yield exactly one request.
std::vector<ApiRequest> instantiate(const MaskedRequest& masked,
                                    const std::vector<std::string>& values);

}  // namespace restinfer
