#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace triage::tok {

struct TokenizerOptions {
  bool lowercase = true;
  // Romanized-Hindi spelling normalization (ee->i, oo->u, doubled letters
  // collapsed) applied per word before lookup.
  bool hinglish_normalize = false;
};

// Whitespace/punctuation pre-tokenization. Placeholder tokens such as
// <PHONE> survive as single words.
std::vector<std::string> pre_tokenize(std::string_view text, const TokenizerOptions& options);

// Spelling folding used by the Hinglish-adapted encoders.
std::string hinglish_fold(std::string_view word);

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kMask = "[MASK]";

class Vocab {
 public:
  Vocab();  // specials and placeholders only

  int id(std::string_view token) const;  // -1 when absent
  bool contains(std::string_view token) const { return id(token) >= 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  int add(std::string token);

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int cls_id() const { return 2; }
  int sep_id() const { return 3; }

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct VocabOptions {
  std::size_t max_size = 8000;
  std::size_t min_count = 1;
};

// Whole words by frequency plus every observed character as a word-initial
// piece and a ##continuation piece, so any word over seen characters splits.
Vocab build_vocab(const std::vector<std::string>& texts, const TokenizerOptions& options,
                  const VocabOptions& vocab_options = {});

struct Encoding {
  std::vector<int> ids;            // length max_len, padded with [PAD]
  std::vector<std::uint8_t> mask;  // 1 for real tokens
  std::size_t length = 0;          // real tokens including [CLS] and [SEP]
  bool truncated = false;
};

class WordPieceTokenizer {
 public:
  WordPieceTokenizer(Vocab vocab, TokenizerOptions options);

  // Greedy longest-match-first subword split of one word.
  std::vector<int> word_pieces(std::string_view word) const;
  std::vector<int> tokenize(std::string_view text) const;

  // [CLS] tokens [SEP], tail truncated to max_len, padded. Blank text throws
  // PreconditionError.
  Encoding encode(std::string_view text, std::size_t max_len) const;

  const Vocab& vocab() const { return vocab_; }
  const TokenizerOptions& options() const { return options_; }

 private:
  Vocab vocab_;
  TokenizerOptions options_;
};

}  // namespace triage::tok
