#include <doctest.h>

#include <cmath>

#include "triage/encoder.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"
#include "triage/tokenizer.hpp"

using namespace triage;

TEST_CASE("pre-tokenization keeps placeholders and splits punctuation") {
  tok::TokenizerOptions o;
  auto w = tok::pre_tokenize("Mera <PHONE> pe CALL aaya, fir <EMAIL>!", o);
  CHECK(w == std::vector<std::string>{"mera", "<PHONE>", "pe", "call", "aaya", ",", "fir", "<EMAIL>", "!"});
  o.lowercase = false;
  CHECK(tok::pre_tokenize("CALL", o)[0] == "CALL");
}

TEST_CASE("hinglish spelling folding") {
  CHECK(tok::hinglish_fold("meera") == "mira");
  CHECK(tok::hinglish_fold("khoob") == "khub");
  CHECK(tok::hinglish_fold("accha") == "acha");
  CHECK(tok::hinglish_fold("<PERSON>") == "<PERSON>");
  CHECK(tok::hinglish_fold("paise") == "paise");
}

TEST_CASE("wordpiece split falls back to characters") {
  tok::TokenizerOptions o;
  auto vocab = tok::build_vocab({"paise kat gaye", "paise"}, o);
  tok::WordPieceTokenizer t(vocab, o);
  CHECK(t.word_pieces("paise").size() == 1);
  auto pieces = t.word_pieces("paiseaye");
  REQUIRE(pieces.size() >= 2);
  CHECK(vocab.token(pieces[0]) == "paise");
  CHECK(vocab.token(pieces[1]).rfind("##", 0) == 0);
  CHECK(t.word_pieces("xyz") == std::vector<int>{vocab.unk_id()});
}

TEST_CASE("encoding pads and truncates the tail") {
  tok::TokenizerOptions o;
  std::string ten, long_text;
  for (int i = 0; i < 10; ++i) ten += "w" + std::to_string(i) + " ";
  for (int i = 0; i < 300; ++i) long_text += "t" + std::to_string(i) + " ";
  auto vocab = tok::build_vocab({ten, long_text}, o);
  tok::WordPieceTokenizer t(vocab, o);
  auto e = t.encode(ten, 128);
  CHECK(e.ids.size() == 128);
  CHECK(e.length == 12);
  CHECK(e.ids[0] == vocab.cls_id());
  CHECK(e.ids[11] == vocab.sep_id());
  CHECK(e.ids[12] == vocab.pad_id());
  CHECK(e.mask[11] == 1);
  CHECK(e.mask[12] == 0);
  auto l = t.encode(long_text, 256);
  CHECK(l.ids.size() == 256);
  CHECK(l.length == 256);
  CHECK(l.truncated);
  CHECK(vocab.token(l.ids[1]) == "t0");
  CHECK(vocab.token(l.ids[254]) == "t253");
  CHECK(l.ids[255] == vocab.sep_id());
  CHECK_THROWS_AS(t.encode("", 128), PreconditionError);
  CHECK_THROWS_AS(t.encode("   ", 128), PreconditionError);
}

TEST_CASE("vocabulary file round-trip") {
  tok::TokenizerOptions o;
  auto vocab = tok::build_vocab({"ek do teen", "<PHONE> char"}, o);
  auto path = std::filesystem::temp_directory_path() / "triage_vocab_test.txt";
  vocab.save(path);
  auto back = tok::Vocab::load(path);
  CHECK(back.tokens() == vocab.tokens());
  std::filesystem::remove(path);
}

namespace {

double total_loss(const nn::TransformerEncoder& enc, const std::vector<std::vector<int>>& seqs,
                  const std::vector<std::size_t>& labels) {
  double loss = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    Eigen::VectorXd z = enc.logits(seqs[i]);
    const double mx = z.maxCoeff();
    loss += -(z(static_cast<Eigen::Index>(labels[i])) - mx - std::log((z.array() - mx).exp().sum()));
  }
  return loss;
}

void gradient_check(nn::Pooling pooling) {
  nn::EncoderConfig c;
  c.vocab_size = 12;
  c.max_positions = 8;
  c.d_model = 8;
  c.heads = 2;
  c.ffn = 12;
  c.layers = 2;
  c.num_labels = 3;
  c.init_std = 0.5;
  c.pooling = pooling;
  nn::TransformerEncoder enc(c, 7);
  // Non-trivial norms and biases so their gradients are exercised.
  Rng rng(3);
  for (auto& p : enc.params()) {
    if (p.rows() == 1) p = p.unaryExpr([&](double x) { return x + 0.3 * rng.normal(); });
  }
  std::vector<std::vector<int>> seqs = {{2, 5, 7, 9, 3}, {2, 6, 6, 11, 4, 3}};
  std::vector<std::size_t> labels = {1, 2};
  auto grads = enc.zero_like();
  for (std::size_t i = 0; i < seqs.size(); ++i) enc.accumulate_gradient(seqs[i], labels[i], grads, 1.0);
  const double h = 1e-6;
  double worst = 0;
  for (std::size_t pi = 0; pi < enc.params().size(); ++pi) {
    auto& p = enc.params()[pi];
    for (Eigen::Index k = 0; k < p.size(); k += 3) {
      const double orig = p.data()[k];
      p.data()[k] = orig + h;
      const double up = total_loss(enc, seqs, labels);
      p.data()[k] = orig - h;
      const double down = total_loss(enc, seqs, labels);
      p.data()[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[pi].data()[k];
      const double err = std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-6);
}

}  // namespace

TEST_CASE("encoder backward matches finite differences") {
  gradient_check(nn::Pooling::Cls);
  gradient_check(nn::Pooling::Mean);
}

TEST_CASE("weights serialize bit-exactly") {
  nn::EncoderConfig c;
  c.vocab_size = 20;
  c.max_positions = 16;
  c.d_model = 8;
  c.heads = 2;
  c.ffn = 8;
  c.layers = 1;
  c.num_labels = 14;
  nn::TransformerEncoder enc(c, 1);
  const auto blob = enc.serialize();
  nn::TransformerEncoder back(c, nn::TransformerEncoder::deserialize(blob));
  CHECK(back.serialize() == blob);
  std::vector<int> ids = {2, 7, 3};
  CHECK((back.logits(ids).array() == enc.logits(ids).array()).all());
  CHECK_THROWS_AS(nn::TransformerEncoder::deserialize(blob.substr(0, blob.size() - 1)), IntegrityError);
  c.d_model = 16;
  c.heads = 4;
  CHECK_THROWS_AS(nn::TransformerEncoder(c, nn::TransformerEncoder::deserialize(blob)), IntegrityError);
}

TEST_CASE("adamw decays only masked tensors") {
  nn::Params p = {nn::Matrix::Constant(1, 1, 1.0), nn::Matrix::Constant(1, 1, 1.0)};
  nn::Params g = {nn::Matrix::Zero(1, 1), nn::Matrix::Zero(1, 1)};
  nn::AdamW opt({0.9, 0.999, 1e-8, 0.1}, {true, false});
  opt.step(p, g, 0.5);
  CHECK(p[0](0, 0) == doctest::Approx(0.95));
  CHECK(p[1](0, 0) == 1.0);
  // Plain Adam step: first update magnitude equals lr for a constant gradient.
  nn::Params q = {nn::Matrix::Constant(1, 1, 0.0)};
  nn::Params gq = {nn::Matrix::Constant(1, 1, 4.0)};
  nn::AdamW opt2({0.9, 0.999, 1e-12, 0.0}, {false});
  opt2.step(q, gq, 0.01);
  CHECK(q[0](0, 0) == doctest::Approx(-0.01));
}
