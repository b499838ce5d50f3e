#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ed2d {

// Closed description of the JSON a structured model call must produce.
// `conform` validates a candidate in place and canonicalises enum spellings
// (case and surrounding whitespace), so callers can switch on exact strings.
class Shape {
public:
    enum class Kind { Text, Integer, Enum, TextList, Object, List };

    struct Field {
        std::string name;
        std::shared_ptr<const Shape> shape;
        bool required = true;
    };

    static Shape text(bool allow_empty = false);
    static Shape integer(long long min, long long max);
    static Shape one_of(std::vector<std::string> values);
    static Shape text_list(std::size_t min_items, std::size_t max_items = std::numeric_limits<std::size_t>::max());
    static Shape object(std::vector<Field> fields);
    static Shape list_of(Shape item, std::size_t min_items,
                         std::size_t max_items = std::numeric_limits<std::size_t>::max());

    static Field field(std::string name, Shape shape, bool required = true);

    Kind kind() const noexcept { return kind_; }
    const std::vector<std::string>& enum_values() const noexcept { return values_; }
    const std::vector<Field>& fields() const noexcept { return fields_; }

    // Appends one message per violation, prefixed by the JSON path.
    void conform(nlohmann::json& value, const std::string& path, std::vector<std::string>& violations) const;
    std::vector<std::string> conform(nlohmann::json& value) const;

    // Compact example-like rendering used in corrective prompts, e.g.
    // {"stance": "supporting" | "refuting" | "neutral"}
    std::string describe() const;

private:
    explicit Shape(Kind kind) : kind_(kind) {}

    Kind kind_;
    bool allow_empty_ = false;
    long long min_ = 0;
    long long max_ = 0;
    std::size_t min_items_ = 0;
    std::size_t max_items_ = 0;
    std::vector<std::string> values_;
    std::vector<Field> fields_;
    std::shared_ptr<const Shape> item_;
};

// Pulls the JSON object out of a raw model reply: the whole reply, a fenced
// ```json block, or the outermost {...} span, in that order. When `shape` is an
// object whose only required field is an enum, a bare reply equal to one of the
// enum values ("FAKE") is accepted as that field.
std::optional<nlohmann::json> extract_json(std::string_view raw, const Shape& shape);

}  // namespace ed2d
