#include <doctest.h>

#include <filesystem>

#include "styleobf/metrics.hpp"

using namespace styleobf;

namespace {

Sentence sent(const Vocabulary& v, const std::string& line) { return tokenize(v, line); }

Vocabulary tiny_vocab() {
  std::vector<std::vector<std::string>> corpora = {{"a b c d e f g h the cat sat down on mat"}};
  return build_vocabulary(corpora, 1);
}

// count records of class 1 per attribute group, hit of them predicted 1
std::vector<PredictionRecord> gap_records(int total_a, int hit_a, int total_b, int hit_b) {
  std::vector<PredictionRecord> out;
  for (int g = 0; g < 2; ++g) {
    const int total = g == 0 ? total_a : total_b;
    const int hit = g == 0 ? hit_a : hit_b;
    for (int i = 0; i < total; ++i) {
      PredictionRecord r;
      r.true_label = 1;
      r.predicted = i < hit ? 1 : 0;
      r.attr = g;
      r.probs = {r.predicted == 1 ? 0.2 : 0.8, r.predicted == 1 ? 0.8 : 0.2};
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("tpr gap golden value and antisymmetry") {
  const auto records = gap_records(10, 8, 10, 5);
  CHECK(tpr_gap(records, 0, 1) == doctest::Approx(0.300).epsilon(1e-12));
  CHECK(tpr_gap(records, 1, 1) == doctest::Approx(-0.300).epsilon(1e-12));

  // perfectly accurate classifier has zero gap
  const auto perfect = gap_records(7, 7, 9, 9);
  CHECK(tpr_gap(perfect, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tpr gap input validation") {
  auto records = gap_records(4, 2, 4, 1);
  records[0].attr = 2;  // three attribute values now
  CHECK_THROWS_AS(tpr_gap(records, 0, 1), DataError);

  auto one_sided = gap_records(4, 2, 4, 1);
  for (auto& r : one_sided)
    if (r.attr == 1) r.true_label = 0;  // group 1 has no class-1 examples
  CHECK_THROWS_AS(tpr_gap(one_sided, 0, 1), DataError);
}

TEST_CASE("entropy golden value and validation") {
  Vec p(2);
  p << 0.75, 0.25;
  CHECK(entropy_bits(p) == doctest::Approx(0.811278).epsilon(1e-5));

  Vec uniform(4);
  uniform.setConstant(0.25);
  CHECK(entropy_bits(uniform) == doctest::Approx(2.0).epsilon(1e-12));

  Vec point(3);
  point << 1.0, 0.0, 0.0;
  CHECK(entropy_bits(point) == doctest::Approx(0.0).epsilon(1e-12));

  Vec bad(2);
  bad << 0.9, 0.2;
  CHECK_THROWS_AS(entropy_bits(bad), DataError);
  Vec neg(2);
  neg << 1.1, -0.1;
  CHECK_THROWS_AS(entropy_bits(neg), DataError);
}

TEST_CASE("confident response rate uses a strict threshold") {
  std::vector<PredictionRecord> records(3);
  records[0].probs = {0.1, 0.9};
  records[1].probs = {0.4, 0.6};
  records[2].probs = {0.8, 0.2};
  CHECK(confident_response_rate(records, 0.75) == doctest::Approx(66.67).epsilon(0.0002));
  // exactly at the threshold does not count
  records[1].probs = {0.25, 0.75};
  CHECK(confident_response_rate(records, 0.75) == doctest::Approx(66.67).epsilon(0.0002));
}

TEST_CASE("bt accuracy golden value and alignment checks") {
  const Vocabulary v = tiny_vocab();
  CHECK(bt_accuracy({sent(v, "a b c")}, {sent(v, "a b d")}) ==
        doctest::Approx(66.67).epsilon(0.0002));
  CHECK(bt_accuracy({sent(v, "a b c")}, {sent(v, "a b c")}) == doctest::Approx(100.0));
  // shorter output: missing positions count against the original length
  CHECK(bt_accuracy({sent(v, "a b c d")}, {sent(v, "a b")}) == doctest::Approx(50.0));
  // longer output: extra tokens give no credit
  CHECK(bt_accuracy({sent(v, "a b")}, {sent(v, "a b c d")}) == doctest::Approx(100.0));
  CHECK_THROWS_AS(bt_accuracy({sent(v, "a")}, {}), DataError);
}

TEST_CASE("lexical diversity golden value") {
  const Vocabulary v = tiny_vocab();
  CHECK(lexical_diversity({sent(v, "a a a a")}) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(lexical_diversity({sent(v, "a b"), sent(v, "c d")}) == doctest::Approx(100.0));
  // a duplicate strictly lowers the ratio
  CHECK(lexical_diversity({sent(v, "a b"), sent(v, "c a")}) == doctest::Approx(75.0));
  CHECK_THROWS_AS(lexical_diversity({}), DataError);
}

TEST_CASE("bleu identity, disjoint, and brevity-penalty hand case") {
  const Vocabulary v = tiny_vocab();
  const std::vector<Sentence> refs = {sent(v, "the cat sat on the mat")};
  CHECK(bleu(refs, refs) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(bleu({sent(v, "a b c d e")}, refs) == doctest::Approx(0.0).epsilon(1e-12));

  // candidate "the cat sat" vs reference "the cat sat down": 1-3 gram
  // precision all 1, no candidate 4-grams (order skipped), BP = e^(1 - 4/3)
  const double got = bleu({sent(v, "the cat sat")}, {sent(v, "the cat sat down")});
  CHECK(got == doctest::Approx(100.0 * std::exp(-1.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("gleu identity, disjoint, and pooled min hand case") {
  const Vocabulary v = tiny_vocab();
  const std::vector<Sentence> refs = {sent(v, "the cat sat on the mat")};
  CHECK(gleu(refs, refs) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(gleu({sent(v, "a b c d e")}, refs) == doctest::Approx(0.0).epsilon(1e-12));

  // pooled counts: candidate 6 n-grams all matched, reference has 10
  // -> min(precision=1, recall=0.6) = 60%
  CHECK(gleu({sent(v, "the cat sat")}, {sent(v, "the cat sat down")}) ==
        doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("prediction records JSONL round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "styleobf_test_records";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "records.jsonl").string();

  auto records = gap_records(3, 2, 2, 1);
  records[0].probs = {0.125, 0.875};
  save_prediction_records(path, records);
  const auto loaded = load_prediction_records(path);
  REQUIRE(loaded.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].true_label == records[i].true_label);
    CHECK(loaded[i].predicted == records[i].predicted);
    CHECK(loaded[i].attr == records[i].attr);
    REQUIRE(loaded[i].probs.size() == records[i].probs.size());
    for (size_t k = 0; k < records[i].probs.size(); ++k)
      CHECK(loaded[i].probs[k] == doctest::Approx(records[i].probs[k]).epsilon(1e-12));
  }
}
