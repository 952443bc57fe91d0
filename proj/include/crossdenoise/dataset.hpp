#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cdn {

struct RawRating {
  std::string user;
  std::string item;
  double rating = 0.0;
};

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  bool noisy = false;  // true: rating at or below the binarization threshold
};

struct InteractionDataset {
  std::uint32_t num_users = 0;
  std::uint32_t num_items = 0;
  std::vector<Interaction> interactions;
  // index -> original token; populated by binarize, empty for derived splits
  std::vector<std::string> user_tokens;
  std::vector<std::string> item_tokens;
};

struct DataSplit {
  InteractionDataset train;
  InteractionDataset valid;  // retains noise flags; evaluation filters to true positives
  InteractionDataset test;   // true positives only
  std::size_t unfiltered_test_size = 0;
  std::uint64_t split_seed = 0;
};

struct NegativeSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> samples;
  int ratio = 1;
  std::uint64_t epoch_seed = 0;
};

struct ParseConfig {
  char delimiter = '\t';
};

// Delimiter-separated "user item rating [timestamp]" lines; '#' comments and
// blank lines are skipped. Malformed lines raise ParseError with the line number.
std::vector<RawRating> parse_ratings(std::istream& source, const ParseConfig& cfg = {});
std::vector<RawRating> parse_ratings_file(const std::filesystem::path& path,
                                          const ParseConfig& cfg = {});

// Every rated pair becomes one observed interaction with
// noisy = (rating <= noise_threshold). Tokens map to dense 0-based indices in
// first-appearance order; duplicate (user, item) pairs keep the last rating.
InteractionDataset binarize(const std::vector<RawRating>& ratings, double noise_threshold = 3.0);

// Seeded global shuffle, then a count partition by `ratios`. No filtering.
std::vector<InteractionDataset> partition_dataset(const InteractionDataset& ds,
                                                  const std::vector<int>& ratios,
                                                  std::uint64_t seed);

// 8:1:1 partition; the test part is then reduced to true positives.
DataSplit split_dataset(const InteractionDataset& ds, std::uint64_t seed,
                        const std::vector<int>& ratios = {8, 1, 1});

// k * |train| negative pairs drawn uniformly (with replacement across draws)
// from the unobserved cells, rejection-sampled against the observed train set.
// The stream is keyed by (seed, epoch) so every epoch draws fresh negatives.
NegativeSet sample_negatives(const InteractionDataset& train, int k, std::uint64_t seed,
                             int epoch);

// Latent-factor generator with exact ground-truth noise flags: the densest
// `clean_density` share of cells become clean positives, then noisy positives
// are injected from the remaining cells until they make up `noise_fraction`
// of all interactions.
InteractionDataset synth_generate(std::uint32_t num_users, std::uint32_t num_items,
                                  int latent_dim, double noise_fraction, std::uint64_t seed,
                                  double clean_density = 0.05);

// Observed-pair membership key.
inline std::uint64_t pair_key(std::uint32_t user, std::uint32_t item) {
  return (static_cast<std::uint64_t>(user) << 32) | item;
}

std::unordered_set<std::uint64_t> observed_set(const InteractionDataset& ds);

// Text form: header "M\tN", then one "user\titem\tflag" line per interaction.
std::string serialize_dataset(const InteractionDataset& ds);
InteractionDataset deserialize_dataset(const std::string& text);
void save_dataset(const InteractionDataset& ds, const std::filesystem::path& path);
InteractionDataset load_dataset(const std::filesystem::path& path);

void save_split(const DataSplit& split, const std::filesystem::path& dir);
DataSplit load_split(const std::filesystem::path& dir);

// items per user, each list ascending; sized num_users
std::vector<std::vector<std::uint32_t>> items_by_user(const InteractionDataset& ds,
                                                      bool true_positives_only = false);

}  // namespace cdn
