#include "textattr/highlight.hpp"

#include <algorithm>
#include <numeric>

#include "textattr/errors.hpp"

namespace textattr {

namespace {

std::string escape_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<int> ranked_features(const std::vector<double>& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[static_cast<std::size_t>(a)] !=
        values[static_cast<std::size_t>(b)]) {
      return values[static_cast<std::size_t>(a)] >
             values[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  return order;
}

}  // namespace

HighlightSelection select_highlight_tokens(const Document& doc,
                                           const Attribution& attr,
                                           int budget_percent) {
  if (budget_percent < 1 || budget_percent > 100) {
    throw ConfigError("highlight budget percent must be in [1, 100]");
  }
  // Token-level values are merged per word first; words and sentences are
  // used as-is.
  Attribution display = attr;
  if (attr.granularity == Granularity::token) {
    display = merge_subwords(attr, doc);
  }
  Partition partition = make_partition(doc, display.granularity);
  if (partition.groups.size() != display.values.size()) {
    throw SchemaError("attribution does not match the document partition");
  }

  HighlightSelection sel;
  sel.budget_tokens = doc.tokens.size() *
                      static_cast<std::size_t>(budget_percent) / 100;

  std::size_t used = 0;
  for (int g : ranked_features(display.values)) {
    const auto& group = partition.groups[static_cast<std::size_t>(g)];
    if (used + group.size() <= sel.budget_tokens) {
      sel.token_positions.insert(sel.token_positions.end(), group.begin(),
                                 group.end());
      used += group.size();
      continue;
    }
    if (display.granularity == Granularity::sentence &&
        used < sel.budget_tokens) {
      // Sentences may be cut; leading tokens fill the budget exactly.
      const std::size_t room = sel.budget_tokens - used;
      std::vector<int> sorted = group;
      std::sort(sorted.begin(), sorted.end());
      sel.token_positions.insert(sel.token_positions.end(), sorted.begin(),
                                 sorted.begin() + static_cast<long>(room));
      sel.truncated = true;
    }
    break;
  }
  std::sort(sel.token_positions.begin(), sel.token_positions.end());
  return sel;
}

std::string render_highlight_html(const Document& doc, const Attribution& attr,
                                  const HighlightSelection& selection) {
  std::string body;
  std::size_t cursor = 0;
  for (int pos : selection.token_positions) {
    const RawToken& tok = doc.surface[static_cast<std::size_t>(pos)];
    body += escape_html(
        std::string_view(doc.raw_text).substr(cursor, tok.begin - cursor));
    body += "<span class=\"hl\">";
    body += escape_html(
        std::string_view(doc.raw_text).substr(tok.begin, tok.end - tok.begin));
    body += "</span>";
    cursor = tok.end;
  }
  body += escape_html(std::string_view(doc.raw_text).substr(cursor));

  std::string html;
  html += "<!doctype html>\n<html lang=\"en\">\n<head>\n";
  html += "<meta charset=\"utf-8\">\n";
  html += "<title>" + escape_html(doc.id) + "</title>\n";
  html +=
      "<style>\n"
      "body { font-family: sans-serif; margin: 2rem auto; max-width: 46rem; }\n"
      ".meta { color: #555; font-size: 0.85rem; border-bottom: 1px solid "
      "#ccc; padding-bottom: 0.5rem; }\n"
      ".hl { background: #ffd54f; }\n"
      "</style>\n</head>\n<body>\n";
  html += "<p class=\"meta\">document " + escape_html(doc.id) + " &middot; " +
          escape_html(attr.method) + " &middot; " +
          granularity_name(attr.granularity) + " &middot; seed " +
          std::to_string(attr.seed) + " &middot; class " +
          std::to_string(attr.target_class) + "</p>\n";
  html += "<p class=\"text\">" + body + "</p>\n";
  html += "</body>\n</html>\n";
  return html;
}

}  // namespace textattr
