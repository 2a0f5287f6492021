// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/textenc/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace geotag::textenc {

Vocab::Vocab() {
  add("[PAD]");
  add("[UNK]");
  add("[CLS]");
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocab file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < 3 || lines[0] != "[PAD]" || lines[1] != "[UNK]" || lines[2] != "[CLS]")
    throw std::runtime_error("vocab file " + path.string() + " lacks the reserved tokens");
  Vocab v;
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (v.add(lines[i]) != static_cast<int>(i))
      throw std::runtime_error("vocab file " + path.string() + " repeats token on line " + std::to_string(i + 1));
  }
  return v;
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size) {
  if (max_size < 3) throw std::invalid_argument("build_vocab: max_size must leave room for reserved tokens");
  std::map<std::string, std::size_t> freq;
  for (const auto& text : corpus)
    for (auto& tok : normalize_tokens(text)) ++freq[tok];
  // Normalized tokens never contain brackets, so they cannot collide with the
  // reserved ones.
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    v.add(tok);
  }
  return v;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("tokenize: max_len must be at least 1");
  TokenSeq seq;
  seq.ids.push_back(Vocab::kCls);
  for (const auto& tok : normalize_tokens(text)) {
    if (seq.ids.size() >= max_len) break;
    seq.ids.push_back(vocab.id(tok));
  }
  seq.mask.assign(seq.ids.size(), 1);
  return seq;
}

std::vector<TokenSeq> pad_batch(std::vector<TokenSeq> batch) {
  std::size_t longest = 0;
  for (const auto& s : batch) longest = std::max(longest, s.ids.size());
  for (auto& s : batch) {
    s.ids.resize(longest, Vocab::kPad);
    s.mask.resize(longest, 0);
  }
  return batch;
}

}  // namespace geotag::textenc
