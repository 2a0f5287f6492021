// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "geotag/data/geo.hpp"
#include "geotag/temporal/time.hpp"

namespace geotag::data {

void SynthConfig::validate() const {
  if (n_pois < 1 || n_themes < 1 || n_subthemes < n_themes || n_pois < n_subthemes)
    throw std::invalid_argument("synth: need n_pois >= n_subthemes >= n_themes >= 1");
  if (posts_per_poi < 1 || vocab_size < 1) throw std::invalid_argument("synth: posts_per_poi and vocab_size >= 1");
  for (double p : {keyword_prob, source_prob, hour_prob, location_prob})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("synth: probabilities must lie in [0, 1]");
  if (!(lat_min < lat_max && lon_min < lon_max) || !valid_coordinates(lat_min, lon_min) ||
      !valid_coordinates(lat_max, lon_max))
    throw std::invalid_argument("synth: invalid bounding box");
  if (scatter_radius_m < 0.0 || scatter_radius_m >= kLabelRadiusM)
    throw std::invalid_argument("synth: scatter radius must be below the 100 m labeling radius");
  if (min_spacing_m <= 2.0 * scatter_radius_m)
    throw std::invalid_argument("synth: POI spacing too small for unambiguous labeling");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"n_pois", c.n_pois},
       {"n_themes", c.n_themes},
       {"n_subthemes", c.n_subthemes},
       {"posts_per_poi", c.posts_per_poi},
       {"keyword_prob", c.keyword_prob},
       {"source_prob", c.source_prob},
       {"hour_prob", c.hour_prob},
       {"location_prob", c.location_prob},
       {"vocab_size", c.vocab_size},
       {"lat_min", c.lat_min},
       {"lat_max", c.lat_max},
       {"lon_min", c.lon_min},
       {"lon_max", c.lon_max},
       {"scatter_radius_m", c.scatter_radius_m},
       {"min_spacing_m", c.min_spacing_m},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.n_pois = j.value("n_pois", d.n_pois);
  c.n_themes = j.value("n_themes", d.n_themes);
  c.n_subthemes = j.value("n_subthemes", d.n_subthemes);
  c.posts_per_poi = j.value("posts_per_poi", d.posts_per_poi);
  c.keyword_prob = j.value("keyword_prob", d.keyword_prob);
  c.source_prob = j.value("source_prob", d.source_prob);
  c.hour_prob = j.value("hour_prob", d.hour_prob);
  c.location_prob = j.value("location_prob", d.location_prob);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.lat_min = j.value("lat_min", d.lat_min);
  c.lat_max = j.value("lat_max", d.lat_max);
  c.lon_min = j.value("lon_min", d.lon_min);
  c.lon_max = j.value("lon_max", d.lon_max);
  c.scatter_radius_m = j.value("scatter_radius_m", d.scatter_radius_m);
  c.min_spacing_m = j.value("min_spacing_m", d.min_spacing_m);
  c.seed = j.value("seed", d.seed);
}

namespace {

constexpr const char* kSources[] = {"Twitter for iPhone", "Twitter for Android", "Instagram",
                                    "Foursquare",         "Twitter Web App",     "Tweetbot for iOS"};
constexpr const char* kSuburbs[] = {"Melbourne", "Carlton", "Southbank", "Docklands",
                                    "Fitzroy",   "Richmond", "St Kilda", "Collingwood"};
constexpr int kPlacementAttempts = 20000;

std::string fmt(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

// Pronounceable pseudo-words so keyword and background vocabularies look like
// ordinary tokens to the tokenizer.
class WordMaker {
 public:
  explicit WordMaker(std::mt19937_64& rng) : rng_(rng) {}

  std::string fresh() {
    static constexpr char kCons[] = "bdfgklmnprstvz";
    static constexpr char kVowels[] = "aeiou";
    for (;;) {
      const int syllables = 2 + static_cast<int>(rng_() % 2);
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w.push_back(kCons[rng_() % (sizeof kCons - 1)]);
        w.push_back(kVowels[rng_() % (sizeof kVowels - 1)]);
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

}  // namespace

SynthData gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto chance = [&](double p) { return unit(rng) < p; };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  SynthData out;

  // POI placement by rejection sampling.
  std::uniform_real_distribution<double> lat_d(cfg.lat_min, cfg.lat_max);
  std::uniform_real_distribution<double> lon_d(cfg.lon_min, cfg.lon_max);
  std::vector<std::pair<double, double>> sites;
  for (int i = 0; i < cfg.n_pois; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const double la = lat_d(rng), lo = lon_d(rng);
      placed = std::all_of(sites.begin(), sites.end(), [&](const auto& s) {
        return haversine_m(la, lo, s.first, s.second) >= cfg.min_spacing_m;
      });
      if (placed) sites.emplace_back(la, lo);
    }
    if (!placed)
      throw std::invalid_argument("synth: bounding box too small to place " + std::to_string(cfg.n_pois) +
                                  " POIs " + std::to_string(cfg.min_spacing_m) + " m apart");
  }

  // Subtheme s belongs to theme s % n_themes; the first n_subthemes POIs cover
  // every subtheme so all levels are populated.
  std::vector<int> poi_subtheme(static_cast<std::size_t>(cfg.n_pois));
  for (int i = 0; i < cfg.n_pois; ++i)
    poi_subtheme[static_cast<std::size_t>(i)] =
        i < cfg.n_subthemes ? i : static_cast<int>(pick(static_cast<std::size_t>(cfg.n_subthemes)));

  WordMaker words(rng);
  std::vector<std::string> background(static_cast<std::size_t>(cfg.vocab_size));
  for (auto& w : background) w = words.fresh();

  struct Profile {
    std::size_t source;
    int peak_hour;
  };
  std::vector<Profile> profiles;
  const int width = cfg.n_pois >= 1000 ? 4 : 3;
  for (int i = 0; i < cfg.n_pois; ++i) {
    const int sub = poi_subtheme[static_cast<std::size_t>(i)];
    const int theme = sub % cfg.n_themes;
    Poi p;
    p.id = fmt("poi", i, width);
    p.name = "POI " + std::to_string(i);
    p.theme = fmt("theme", theme, 2);
    p.subtheme = fmt("subtheme", sub, 2);
    p.lat = sites[static_cast<std::size_t>(i)].first;
    p.lon = sites[static_cast<std::size_t>(i)].second;
    out.pois.push_back(std::move(p));
    out.keywords.push_back(words.fresh());
    profiles.push_back({pick(std::size(kSources)), static_cast<int>(pick(24))});
  }

  const std::int64_t t0 = temporal::unix_from_civil({2015, 1, 1, 0, 0, 0});
  const std::int64_t t1 = temporal::unix_from_civil({2020, 1, 1, 0, 0, 0});
  std::uniform_int_distribution<std::int64_t> day_d(0, (t1 - t0) / 86400 - 1);
  std::normal_distribution<double> hour_jitter(0.0, 1.0);
  constexpr double kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;

  struct Draft {
    Post post;
    std::string poi;
  };
  std::vector<Draft> drafts;
  for (int i = 0; i < cfg.n_pois; ++i) {
    const auto& poi = out.pois[static_cast<std::size_t>(i)];
    const auto& prof = profiles[static_cast<std::size_t>(i)];
    const int theme = poi_subtheme[static_cast<std::size_t>(i)] % cfg.n_themes;
    for (int k = 0; k < cfg.posts_per_poi; ++k) {
      Post post;
      std::vector<std::string> toks;
      const int n_bg = 3 + static_cast<int>(pick(6));
      for (int t = 0; t < n_bg; ++t) toks.push_back(background[pick(background.size())]);
      if (chance(cfg.keyword_prob))
        toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pick(toks.size() + 1)),
                    out.keywords[static_cast<std::size_t>(i)]);
      std::string text;
      for (const auto& t : toks) text += (text.empty() ? "" : " ") + t;
      post.fields["text"] = text;

      std::string desc;
      const int n_desc = 2 + static_cast<int>(pick(4));
      for (int t = 0; t < n_desc; ++t) desc += (desc.empty() ? "" : " ") + background[pick(background.size())];
      post.fields["user_description"] = desc;

      const std::size_t home = static_cast<std::size_t>(theme) % std::size(kSuburbs);
      post.fields["user_location"] = kSuburbs[chance(cfg.location_prob) ? home : pick(std::size(kSuburbs))];
      post.fields["source"] = kSources[chance(cfg.source_prob) ? prof.source : pick(std::size(kSources))];

      int hour = static_cast<int>(pick(24));
      if (chance(cfg.hour_prob)) hour = ((prof.peak_hour + static_cast<int>(std::lround(hour_jitter(rng)))) % 24 + 24) % 24;
      const std::int64_t ts = t0 + day_d(rng) * 86400 + hour * 3600 + static_cast<std::int64_t>(pick(3600));
      post.fields["created_at"] = temporal::to_iso8601(temporal::civil_from_unix(ts));

      const double dist = cfg.scatter_radius_m * std::sqrt(unit(rng));
      const double bearing = 2.0 * std::numbers::pi * unit(rng);
      post.lat = poi.lat + dist * std::cos(bearing) / kMetersPerDegree;
      post.lon = poi.lon + dist * std::sin(bearing) / (kMetersPerDegree * std::cos(poi.lat * std::numbers::pi / 180.0));
      drafts.push_back({std::move(post), poi.id});
    }
  }
  std::shuffle(drafts.begin(), drafts.end(), rng);
  const int id_width = drafts.size() >= 100000 ? 6 : 5;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    drafts[i].post.id = fmt("post", static_cast<int>(i), id_width);
    out.posts.push_back(std::move(drafts[i].post));
    out.planted.push_back(std::move(drafts[i].poi));
  }
  return out;
}

SplitSets split(const std::vector<Post>& posts, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split: ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: ratios must sum to 1");

  const std::size_t n = posts.size();
  // Largest-remainder target sizes.
  std::array<std::size_t, 3> target{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double exact = ratios[s] * static_cast<double>(n);
    target[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[s] = exact - static_cast<double>(target[s]);
    assigned += target[s];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s)
      if (frac[s] > frac[best] + 1e-12) best = s;
    ++target[best];
    frac[best] = -1.0;
    ++assigned;
  }
  for (std::size_t s = 0; s < 3; ++s)
    if (ratios[s] > 0.0 && target[s] == 0 && n >= 3)
      throw std::invalid_argument("split: split " + std::to_string(s) + " would be empty for " + std::to_string(n) +
                                  " posts");

  // Group by label, shuffle within each group, then deal the concatenated
  // sequence so every prefix tracks the target proportions.
  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[posts[i].label.value_or("")].push_back(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (auto& [label, idx] : groups) {
    std::shuffle(idx.begin(), idx.end(), rng);
    order.insert(order.end(), idx.begin(), idx.end());
  }
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 3;
    double best_deficit = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      if (parts[s].size() >= target[s]) continue;
      const double deficit =
          static_cast<double>(target[s]) * static_cast<double>(p + 1) / static_cast<double>(n) -
          static_cast<double>(parts[s].size());
      if (best == 3 || deficit > best_deficit + 1e-12) {
        best = s;
        best_deficit = deficit;
      }
    }
    parts[best].push_back(order[p]);
  }
  SplitSets out;
  std::array<std::vector<Post>*, 3> dst = {&out.train, &out.val, &out.test};
  for (std::size_t s = 0; s < 3; ++s) {
    std::shuffle(parts[s].begin(), parts[s].end(), rng);
    for (std::size_t i : parts[s]) dst[s]->push_back(posts[i]);
  }
  return out;
}

}  // namespace geotag::data
