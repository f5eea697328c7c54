#include "triage/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "triage/anonymizer.hpp"
#include "triage/errors.hpp"
#include "triage/text.hpp"

namespace triage::tok {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as its own character
}

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size();) {
    const std::size_t n = std::min(utf8_length(static_cast<unsigned char>(word[i])), word.size() - i);
    out.emplace_back(word.substr(i, n));
    i += n;
  }
  return out;
}

bool is_ascii_punct(char c) { return static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c)); }

}  // namespace

std::string hinglish_fold(std::string_view word) {
  if (anon::is_placeholder(word)) return std::string(word);
  const auto lower = [](char x) { return static_cast<char>(std::tolower(static_cast<unsigned char>(x))); };
  std::string out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char c = word[i];
    std::size_t run = 1;
    while (i + run < word.size() && lower(word[i + run]) == lower(c)) ++run;
    if (run > 1 && std::isalpha(static_cast<unsigned char>(c))) {
      const bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
      if (lower(c) == 'e') {
        out.push_back(upper ? 'I' : 'i');
      } else if (lower(c) == 'o') {
        out.push_back(upper ? 'U' : 'u');
      } else {
        out.push_back(c);
      }
      i += run - 1;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> pre_tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string w = options.lowercase ? text::to_lower_ascii(current) : current;
    if (options.hinglish_normalize) w = hinglish_fold(w);
    words.push_back(std::move(w));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '<') {
      const auto close = text.find('>', i);
      if (close != std::string_view::npos && close - i <= 24 &&
          anon::is_placeholder(text.substr(i, close - i + 1))) {
        flush();
        words.emplace_back(text.substr(i, close - i + 1));
        i = close;
        continue;
      }
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      words.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return words;
}

Vocab::Vocab() {
  for (auto s : {kPad, kUnk, kCls, kSep, kMask}) add(std::string(s));
  for (const auto& info : anon::entity_kinds()) add(std::string(info.placeholder));
}

int Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

int Vocab::add(std::string token) {
  if (const auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("vocabulary not found: " + path.string());
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  std::string line;
  while (std::getline(in, line)) v.add(line);
  if (v.size() < 4 || v.token(0) != kPad || v.token(1) != kUnk || v.token(2) != kCls ||
      v.token(3) != kSep) {
    throw IntegrityError("vocabulary does not start with the special tokens: " + path.string());
  }
  return v;
}

Vocab build_vocab(const std::vector<std::string>& texts, const TokenizerOptions& options,
                  const VocabOptions& vocab_options) {
  std::map<std::string, std::size_t> word_counts;
  std::map<std::string, std::size_t> pieces;  // characters and ##characters
  for (const auto& text : texts) {
    for (const auto& w : pre_tokenize(text, options)) {
      ++word_counts[w];
      if (anon::is_placeholder(w)) continue;
      const auto chars = utf8_chars(w);
      for (std::size_t i = 0; i < chars.size(); ++i) {
        ++pieces[i == 0 ? chars[i] : "##" + chars[i]];
      }
    }
  }
  Vocab vocab;
  // Character pieces first so the fallback split always exists.
  for (const auto& [p, n] : pieces) {
    (void)n;
    vocab.add(p);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(word_counts.begin(), word_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [w, n] : ranked) {
    if (vocab.size() >= vocab_options.max_size) break;
    if (n < vocab_options.min_count) break;
    vocab.add(w);
  }
  return vocab;
}

WordPieceTokenizer::WordPieceTokenizer(Vocab vocab, TokenizerOptions options)
    : vocab_(std::move(vocab)), options_(options) {}

std::vector<int> WordPieceTokenizer::word_pieces(std::string_view word) const {
  if (const int whole = vocab_.id(word); whole >= 0) return {whole};
  constexpr std::size_t kMaxWordBytes = 100;
  if (word.size() > kMaxWordBytes) return {vocab_.unk_id()};
  const auto chars = utf8_chars(word);
  std::vector<std::size_t> offsets{0};
  for (const auto& c : chars) offsets.push_back(offsets.back() + c.size());
  std::vector<int> out;
  std::size_t start = 0;
  while (start < chars.size()) {
    int found = -1;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string piece(word.substr(offsets[start], offsets[end] - offsets[start]));
      if (start > 0) piece = "##" + piece;
      found = vocab_.id(piece);
      if (found >= 0) break;
    }
    if (found < 0) return {vocab_.unk_id()};
    out.push_back(found);
    start = end;
  }
  return out;
}

std::vector<int> WordPieceTokenizer::tokenize(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : pre_tokenize(text, options_)) {
    const auto p = word_pieces(w);
    ids.insert(ids.end(), p.begin(), p.end());
  }
  return ids;
}

Encoding WordPieceTokenizer::encode(std::string_view text, std::size_t max_len) const {
  if (text::is_blank(text)) throw PreconditionError("cannot encode empty text");
  if (max_len < 3) throw ConfigError("max sequence length must be at least 3");
  auto body = tokenize(text);
  Encoding e;
  e.truncated = body.size() + 2 > max_len;
  if (e.truncated) body.resize(max_len - 2);
  e.ids.reserve(max_len);
  e.ids.push_back(vocab_.cls_id());
  e.ids.insert(e.ids.end(), body.begin(), body.end());
  e.ids.push_back(vocab_.sep_id());
  e.length = e.ids.size();
  e.mask.assign(e.length, 1);
  e.ids.resize(max_len, vocab_.pad_id());
  e.mask.resize(max_len, 0);
  return e;
}

}  // namespace triage::tok
