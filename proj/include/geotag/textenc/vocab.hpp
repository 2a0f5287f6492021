// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geotag::textenc {

/// Token <-> id map with reserved ids 0 = [PAD], 1 = [UNK], 2 = [CLS].
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;

  Vocab();

  /// Appends a token if absent; returns its id.
  int add(const std::string& token);
  /// Id of `token`, or kUnk.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line, line number = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Lowercases and splits on whitespace and ASCII punctuation; each
/// punctuation character becomes its own token.
std::vector<std::string> normalize_tokens(std::string_view text);

/// Reserved tokens followed by the most frequent normalized tokens of the
/// corpus, ordered by descending frequency then lexicographically.
Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size);

struct TokenSeq {
  std::vector<int> ids;
  /// True on non-[PAD] positions.
  std::vector<std::uint8_t> mask;

  std::size_t size() const { return ids.size(); }
};

/// [CLS] followed by the normalized tokens, truncated to `max_len`.
TokenSeq tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len);

/// Right-pads every sequence with [PAD] to the longest length in the batch.
std::vector<TokenSeq> pad_batch(std::vector<TokenSeq> batch);

}  // namespace geotag::textenc
