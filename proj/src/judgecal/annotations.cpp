#include "normpipe/judgecal.hpp"

#include <charconv>
#include <set>

namespace normpipe::judgecal {

std::vector<RatingRecord> parse_annotations(std::string_view content, std::string_view origin) {
    if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
    const auto rows = parse_csv(content);
    const std::vector<std::string> header{"item_id", "rater", "rating", "rationale"};
    if (rows.empty()) throw DataError(std::string(origin) + ": empty annotation file");
    std::vector<std::string> got;
    for (const std::string& f : rows[0]) got.emplace_back(trim(f));
    if (got != header) throw DataError(std::string(origin) + ": missing header item_id,rater,rating,rationale");

    std::vector<RatingRecord> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        auto warn = [&](const std::string& why) {
            emit_warning("judgecal", std::string(origin) + ": record " + std::to_string(r) + ": " + why + ", skipped");
        };
        if (f.size() == 1 && trim(f[0]).empty()) continue;
        if (f.size() != 4) {
            warn("expected 4 fields, found " + std::to_string(f.size()));
            continue;
        }
        RatingRecord rec{std::string(trim(f[0])), std::string(trim(f[1])), 0, f[3]};
        if (rec.item_id.empty()) {
            warn("empty item_id");
            continue;
        }
        if (!rec.rater.starts_with("human:") && !rec.rater.starts_with("judge:")) {
            warn("rater '" + rec.rater + "' is not human:<name> or judge:<model>");
            continue;
        }
        const std::string_view rating = trim(f[2]);
        const auto [ptr, ec] = std::from_chars(rating.data(), rating.data() + rating.size(), rec.rating);
        if (ec != std::errc() || ptr != rating.data() + rating.size()) {
            warn("rating '" + std::string(rating) + "' is not an integer");
            continue;
        }
        if (rec.rating < 1 || rec.rating > 4) {
            warn("rating " + std::to_string(rec.rating) + " outside 1-4");
            continue;
        }
        if (!seen.emplace(rec.item_id, rec.rater).second) {
            warn("duplicate rating of " + rec.item_id + " by " + rec.rater);
            continue;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RatingRecord> load_annotations(const std::string& path) { return parse_annotations(read_file(path), path); }

std::string ratings_csv(const std::vector<RatingRecord>& ratings) {
    std::string out = "item_id,rater,rating,rationale\n";
    for (const RatingRecord& r : ratings)
        out += csv_field(r.item_id) + "," + csv_field(r.rater) + "," + std::to_string(r.rating) + "," +
               csv_field(r.rationale) + "\n";
    return out;
}

}  // namespace normpipe::judgecal
