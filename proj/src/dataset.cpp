#include "crossdenoise/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "crossdenoise/common.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/rng.hpp"

namespace cdn {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<RawRating> parse_ratings(std::istream& source, const ParseConfig& cfg) {
  std::vector<RawRating> out;
  std::string line;
  long line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line) || line[0] == '#') continue;
    auto fields = split_fields(line, cfg.delimiter);
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError("expected 3 or 4 columns, got " + std::to_string(fields.size()), line_no);
    double rating = 0.0;
    if (!parse_double(fields[2], rating))
      throw ParseError("non-numeric rating '" + fields[2] + "'", line_no);
    if (!std::isfinite(rating)) throw ParseError("rating is not finite", line_no);
    out.push_back(RawRating{fields[0], fields[1], rating});
  }
  return out;
}

std::vector<RawRating> parse_ratings_file(const std::filesystem::path& path,
                                          const ParseConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ratings file: " + path.string());
  try {
    return parse_ratings(in, cfg);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());  // message already carries the line
  }
}

InteractionDataset binarize(const std::vector<RawRating>& ratings, double noise_threshold) {
  check(!ratings.empty(), "binarize: empty rating sequence");
  InteractionDataset ds;
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::unordered_map<std::uint64_t, std::size_t> slot;  // pair -> interaction position
  for (const auto& r : ratings) {
    auto [uit, unew] = user_index.try_emplace(r.user, ds.user_tokens.size());
    if (unew) ds.user_tokens.push_back(r.user);
    auto [iit, inew] = item_index.try_emplace(r.item, ds.item_tokens.size());
    if (inew) ds.item_tokens.push_back(r.item);
    std::uint32_t u = uit->second, i = iit->second;
    bool noisy = r.rating <= noise_threshold;
    auto [sit, fresh] = slot.try_emplace(pair_key(u, i), ds.interactions.size());
    if (fresh) {
      ds.interactions.push_back(Interaction{u, i, noisy});
    } else {
      ds.interactions[sit->second].noisy = noisy;  // duplicate pair: last rating wins
    }
  }
  ds.num_users = static_cast<std::uint32_t>(ds.user_tokens.size());
  ds.num_items = static_cast<std::uint32_t>(ds.item_tokens.size());
  return ds;
}

std::vector<InteractionDataset> partition_dataset(const InteractionDataset& ds,
                                                  const std::vector<int>& ratios,
                                                  std::uint64_t seed) {
  check(!ratios.empty(), "partition: no ratios");
  long total_ratio = std::accumulate(ratios.begin(), ratios.end(), 0L);
  check(total_ratio > 0, "partition: ratios must sum to a positive value");

  std::vector<Interaction> shuffled = ds.interactions;
  Rng rng(derive_seed(seed, Stream::split));
  rng.shuffle(shuffled);

  std::size_t n = shuffled.size();
  std::vector<InteractionDataset> parts(ratios.size());
  std::size_t begin = 0;
  long cum = 0;
  for (std::size_t p = 0; p < ratios.size(); ++p) {
    cum += ratios[p];
    std::size_t end = (p + 1 == ratios.size()) ? n : (n * cum) / total_ratio;
    parts[p].num_users = ds.num_users;
    parts[p].num_items = ds.num_items;
    parts[p].interactions.assign(shuffled.begin() + begin, shuffled.begin() + end);
    begin = end;
  }
  return parts;
}

DataSplit split_dataset(const InteractionDataset& ds, std::uint64_t seed,
                        const std::vector<int>& ratios) {
  check(ds.interactions.size() >= 10, "split: need at least 10 interactions");
  check(ratios.size() == 3, "split: expected three ratio parts");
  auto parts = partition_dataset(ds, ratios, seed);
  DataSplit split;
  split.split_seed = seed;
  split.train = std::move(parts[0]);
  split.valid = std::move(parts[1]);
  split.test = std::move(parts[2]);
  split.unfiltered_test_size = split.test.interactions.size();
  std::erase_if(split.test.interactions, [](const Interaction& x) { return x.noisy; });
  return split;
}

std::unordered_set<std::uint64_t> observed_set(const InteractionDataset& ds) {
  std::unordered_set<std::uint64_t> keys;
  keys.reserve(ds.interactions.size() * 2);
  for (const auto& x : ds.interactions) keys.insert(pair_key(x.user, x.item));
  return keys;
}

NegativeSet sample_negatives(const InteractionDataset& train, int k, std::uint64_t seed,
                             int epoch) {
  check(k > 0, "sample_negatives: ratio must be positive");
  std::uint64_t cells = static_cast<std::uint64_t>(train.num_users) * train.num_items;
  auto observed = observed_set(train);
  check(observed.size() < cells, "sample_negatives: no unobserved pair exists");

  NegativeSet out;
  out.ratio = k;
  out.epoch_seed = derive_seed(seed, Stream::negatives, static_cast<std::uint64_t>(epoch));
  std::size_t want = train.interactions.size() * static_cast<std::size_t>(k);
  out.samples.reserve(want);

  Rng rng(out.epoch_seed);
  std::uint64_t budget = 100 * static_cast<std::uint64_t>(want);
  std::uint64_t draws = 0;
  while (out.samples.size() < want) {
    if (draws++ >= budget)
      throw NumericError("sample_negatives: rejection budget exhausted, dataset too dense");
    auto u = static_cast<std::uint32_t>(rng.below(train.num_users));
    auto i = static_cast<std::uint32_t>(rng.below(train.num_items));
    if (observed.contains(pair_key(u, i))) continue;
    out.samples.emplace_back(u, i);
  }
  return out;
}

InteractionDataset synth_generate(std::uint32_t num_users, std::uint32_t num_items,
                                  int latent_dim, double noise_fraction, std::uint64_t seed,
                                  double clean_density) {
  check(num_users > 0 && num_items > 0 && latent_dim > 0, "synth: counts must be positive");
  check(noise_fraction >= 0.0 && noise_fraction < 1.0, "synth: noise_fraction in [0, 1)");
  check(clean_density > 0.0 && clean_density < 1.0, "synth: clean_density in (0, 1)");

  Rng rng(derive_seed(seed, Stream::synth));
  std::vector<double> user_f(std::size_t(num_users) * latent_dim);
  std::vector<double> item_f(std::size_t(num_items) * latent_dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (auto& v : user_f) v = rng.normal(0.0, scale);
  for (auto& v : item_f) v = rng.normal(0.0, scale);

  std::uint64_t cells = static_cast<std::uint64_t>(num_users) * num_items;
  std::vector<std::pair<double, std::uint64_t>> scored(cells);
  for (std::uint32_t u = 0; u < num_users; ++u) {
    const double* pu = user_f.data() + std::size_t(u) * latent_dim;
    for (std::uint32_t i = 0; i < num_items; ++i) {
      const double* qi = item_f.data() + std::size_t(i) * latent_dim;
      double s = 0.0;
      for (int d = 0; d < latent_dim; ++d) s += pu[d] * qi[d];
      std::uint64_t key = pair_key(u, i);
      scored[std::size_t(u) * num_items + i] = {s, key};
    }
  }

  auto n_clean = static_cast<std::size_t>(std::llround(clean_density * double(cells)));
  n_clean = std::max<std::size_t>(1, std::min(n_clean, scored.size() - 1));
  // highest scores first; key breaks ties deterministically
  auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::nth_element(scored.begin(), scored.begin() + n_clean, scored.end(), better);
  std::sort(scored.begin(), scored.begin() + n_clean, better);

  InteractionDataset ds;
  ds.num_users = num_users;
  ds.num_items = num_items;
  std::unordered_set<std::uint64_t> taken;
  taken.reserve(n_clean * 2);
  for (std::size_t j = 0; j < n_clean; ++j) {
    std::uint64_t key = scored[j].second;
    ds.interactions.push_back(
        Interaction{static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key), false});
    taken.insert(key);
  }

  // inject noisy positives so they form a noise_fraction share of all interactions
  auto n_noisy = static_cast<std::size_t>(
      std::llround(noise_fraction / (1.0 - noise_fraction) * double(n_clean)));
  n_noisy = std::min<std::size_t>(n_noisy, cells - n_clean);
  while (taken.size() < n_clean + n_noisy) {
    auto u = static_cast<std::uint32_t>(rng.below(num_users));
    auto i = static_cast<std::uint32_t>(rng.below(num_items));
    std::uint64_t key = pair_key(u, i);
    if (!taken.insert(key).second) continue;
    ds.interactions.push_back(Interaction{u, i, true});
  }
  return ds;
}

std::string serialize_dataset(const InteractionDataset& ds) {
  std::string out;
  out += std::to_string(ds.num_users);
  out += '\t';
  out += std::to_string(ds.num_items);
  out += '\n';
  for (const auto& x : ds.interactions) {
    out += std::to_string(x.user);
    out += '\t';
    out += std::to_string(x.item);
    out += '\t';
    out += x.noisy ? '1' : '0';
    out += '\n';
  }
  return out;
}

InteractionDataset deserialize_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset text is empty");
  InteractionDataset ds;
  {
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2) throw ParseError("bad dataset header", 1);
    ds.num_users = static_cast<std::uint32_t>(std::stoul(fields[0]));
    ds.num_items = static_cast<std::uint32_t>(std::stoul(fields[1]));
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3) throw ParseError("bad interaction row", line_no);
    Interaction x;
    x.user = static_cast<std::uint32_t>(std::stoul(fields[0]));
    x.item = static_cast<std::uint32_t>(std::stoul(fields[1]));
    x.noisy = fields[2] == "1";
    if (x.user >= ds.num_users || x.item >= ds.num_items)
      throw ParseError("interaction index out of range", line_no);
    ds.interactions.push_back(x);
  }
  return ds;
}

void save_dataset(const InteractionDataset& ds, const std::filesystem::path& path) {
  write_text_file(path, serialize_dataset(ds));
}

InteractionDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(read_text_file(path));
}

void save_split(const DataSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(split.train, dir / "train.tsv");
  save_dataset(split.valid, dir / "valid.tsv");
  save_dataset(split.test, dir / "test.tsv");
}

DataSplit load_split(const std::filesystem::path& dir) {
  DataSplit split;
  split.train = load_dataset(dir / "train.tsv");
  split.valid = load_dataset(dir / "valid.tsv");
  split.test = load_dataset(dir / "test.tsv");
  split.unfiltered_test_size = split.test.interactions.size();
  check(split.train.num_users == split.valid.num_users &&
            split.train.num_users == split.test.num_users &&
            split.train.num_items == split.valid.num_items &&
            split.train.num_items == split.test.num_items,
        "split parts disagree on dimensions");
  return split;
}

std::vector<std::vector<std::uint32_t>> items_by_user(const InteractionDataset& ds,
                                                      bool true_positives_only) {
  std::vector<std::vector<std::uint32_t>> lists(ds.num_users);
  for (const auto& x : ds.interactions) {
    if (true_positives_only && x.noisy) continue;
    lists[x.user].push_back(x.item);
  }
  for (auto& l : lists) std::sort(l.begin(), l.end());
  return lists;
}

}  // namespace cdn
