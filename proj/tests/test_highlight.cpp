#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "textattr/corpus.hpp"
#include "textattr/errors.hpp"
#include "textattr/highlight.hpp"

using namespace textattr;

namespace {

Document doc_of_words(int n_words, const std::vector<int>& sentence_ends) {
  std::string text;
  for (int i = 0; i < n_words; ++i) {
    if (i) text += ' ';
    text += "w" + std::to_string(i);
  }
  Vocab v;
  Document doc = make_document("doc", text, v, {}, AbbrevSet::defaults());
  if (!sentence_ends.empty()) {
    doc.sentences.clear();
    int begin = 0;
    for (int end : sentence_ends) {
      doc.sentences.push_back({begin, end});
      begin = end;
    }
  }
  return doc;
}

Attribution sentence_attr(std::vector<double> values) {
  Attribution a;
  a.doc_id = "doc";
  a.method = "kernel_shap";
  a.granularity = Granularity::sentence;
  a.values = std::move(values);
  return a;
}

Attribution token_attr(std::vector<double> values) {
  Attribution a;
  a.doc_id = "doc";
  a.method = "kernel_shap";
  a.granularity = Granularity::token;
  a.values = std::move(values);
  return a;
}

int count_spans(const std::string& html) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = html.find("<span class=\"hl\">", pos)) != std::string::npos) {
    ++count;
    pos += 1;
  }
  return count;
}

}  // namespace

TEST_CASE("token budget is the floored percentage") {
  auto doc = doc_of_words(50, {});
  std::vector<double> values(50, 0.0);
  for (int i = 0; i < 50; ++i) values[i] = 50.0 - i;
  auto sel = select_highlight_tokens(doc, token_attr(values), 10);
  CHECK(sel.budget_tokens == 5);
  CHECK(sel.token_positions.size() == 5);
  CHECK(sel.token_positions == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(!sel.truncated);
}

TEST_CASE("an overflowing top sentence is cut to its leading tokens") {
  // 50 tokens, budget 10% = 5; the best sentence has 8 tokens
  auto doc = doc_of_words(50, {8, 30, 50});
  auto sel =
      select_highlight_tokens(doc, sentence_attr({5.0, 1.0, 0.5}), 10);
  CHECK(sel.budget_tokens == 5);
  CHECK(sel.truncated);
  CHECK(sel.token_positions == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("whole sentences are taken while they fit") {
  // budget 50% of 20 = 10; sentences of 4 + 6 fill it exactly
  auto doc = doc_of_words(20, {4, 10, 20});
  auto sel =
      select_highlight_tokens(doc, sentence_attr({3.0, 2.0, 1.0}), 50);
  CHECK(sel.budget_tokens == 10);
  CHECK(!sel.truncated);
  std::vector<int> expected;
  for (int i = 0; i < 10; ++i) expected.push_back(i);
  CHECK(sel.token_positions == expected);
}

TEST_CASE("a lower-ranked sentence fills the remaining budget by truncation") {
  // budget 6: top sentence (4 tokens) fits, the next (5 tokens) is cut to 2
  auto doc = doc_of_words(12, {4, 9, 12});
  auto sel = select_highlight_tokens(doc, sentence_attr({3.0, 2.0, 1.0}), 50);
  CHECK(sel.budget_tokens == 6);
  CHECK(sel.truncated);
  CHECK(sel.token_positions == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("full budget highlights the whole document") {
  auto doc = doc_of_words(10, {4, 10});
  auto sel = select_highlight_tokens(doc, sentence_attr({1.0, 2.0}), 100);
  CHECK(sel.token_positions.size() == 10);
  CHECK(!sel.truncated);
}

TEST_CASE("token attributions are merged into words before selection") {
  // "wonderful" in subword mode becomes three chunks of one word; selecting
  // it takes all chunks together
  Vocab v;
  TokenizerOptions opt;
  opt.subword = true;
  opt.chunk_len = 4;
  auto doc =
      make_document("doc", "wonderful bad fine plain", v, opt,
                    AbbrevSet::defaults());
  REQUIRE(doc.tokens.size() == 7);  // wond erfu l bad fine plai n
  // chunk values: the word "wonderful" averages highest
  auto attr = token_attr({0.9, 0.8, 0.7, 0.1, 0.2, 0.0, 0.0});
  auto sel = select_highlight_tokens(doc, attr, 50);
  CHECK(sel.budget_tokens == 3);
  CHECK(sel.token_positions == std::vector<int>{0, 1, 2});
}

TEST_CASE("a word never splits under the budget") {
  Vocab v;
  TokenizerOptions opt;
  opt.subword = true;
  opt.chunk_len = 4;
  auto doc = make_document("doc", "wonderful bad fine plain", v, opt,
                           AbbrevSet::defaults());
  // budget 2 tokens < the 3-chunk top word: selection stops at the first
  // feature that would overflow, and words are never split
  auto attr = token_attr({0.9, 0.8, 0.7, 0.5, 0.2, 0.0, 0.0});
  auto sel = select_highlight_tokens(doc, attr, 34);
  CHECK(sel.budget_tokens == 2);
  CHECK(sel.token_positions.empty());
  CHECK(!sel.truncated);
}

TEST_CASE("percent bounds are enforced") {
  auto doc = doc_of_words(10, {});
  auto attr = token_attr(std::vector<double>(10, 1.0));
  CHECK_THROWS_AS(select_highlight_tokens(doc, attr, 0), ConfigError);
  CHECK_THROWS_AS(select_highlight_tokens(doc, attr, 101), ConfigError);
}

TEST_CASE("rendered page escapes markup and carries metadata") {
  Vocab v;
  auto doc = make_document("doc<1>", "a <b> & \"c\" here. tail words!", v, {},
                           AbbrevSet::defaults());
  Attribution attr;
  attr.doc_id = "doc<1>";
  attr.method = "kernel_shap";
  attr.granularity = Granularity::sentence;
  attr.seed = 42;
  attr.target_class = 1;
  attr.values = {2.0, 1.0};
  auto sel = select_highlight_tokens(doc, attr, 100);
  auto html = render_highlight_html(doc, attr, sel);
  CHECK(html.find("&lt;") != std::string::npos);
  CHECK(html.find("&gt;") != std::string::npos);
  CHECK(html.find("&amp;") != std::string::npos);
  CHECK(html.find("&quot;") != std::string::npos);
  CHECK(html.find("<b>") == std::string::npos);
  CHECK(html.find("doc&lt;1&gt;") != std::string::npos);
  CHECK(html.find("kernel_shap") != std::string::npos);
  CHECK(html.find("seed 42") != std::string::npos);
}

TEST_CASE("one span per highlighted token and none beyond the budget") {
  auto doc = doc_of_words(40, {8, 20, 40});
  auto attr = sentence_attr({1.0, 5.0, 0.1});
  auto sel = select_highlight_tokens(doc, attr, 25);
  REQUIRE(sel.budget_tokens == 10);
  auto html = render_highlight_html(doc, attr, sel);
  CHECK(count_spans(html) == static_cast<int>(sel.token_positions.size()));
  CHECK(sel.token_positions.size() <= 10);
}

TEST_CASE("selection positions are ascending and unique") {
  auto doc = doc_of_words(30, {10, 17, 30});
  auto attr = sentence_attr({0.2, 0.9, 0.5});
  auto sel = select_highlight_tokens(doc, attr, 40);
  for (std::size_t i = 1; i < sel.token_positions.size(); ++i) {
    CHECK(sel.token_positions[i] > sel.token_positions[i - 1]);
  }
}
