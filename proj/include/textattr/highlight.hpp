#pragma once

#include <string>
#include <vector>

#include "textattr/attribution.hpp"
#include "textattr/corpus.hpp"

namespace textattr {

struct HighlightSelection {
  std::vector<int> token_positions;  // ascending token indices to highlight
  std::size_t budget_tokens = 0;     // floor(percent * T / 100)
  bool truncated = false;            // a sentence was cut to fit the budget
};

// Greedy selection in decreasing attribution order under a token budget.
// Token-level attributions are first averaged into words so highlighting
// never splits a word. A word that would overflow the budget stops the
// selection; an overflowing sentence is instead truncated to its leading
// tokens so exactly the budget is used.
HighlightSelection select_highlight_tokens(const Document& doc,
                                           const Attribution& attr,
                                           int budget_percent);

// Self-contained page: escaped document text with one span per highlighted
// token, plus a metadata header naming the document, method and seed.
std::string render_highlight_html(const Document& doc, const Attribution& attr,
                                  const HighlightSelection& selection);

}  // namespace textattr
