#include "ed2d/shape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ed2d/text.hpp"

namespace ed2d {

Shape Shape::text(bool allow_empty) {
    Shape s(Kind::Text);
    s.allow_empty_ = allow_empty;
    return s;
}

Shape Shape::integer(long long min, long long max) {
    Shape s(Kind::Integer);
    s.min_ = min;
    s.max_ = max;
    return s;
}

Shape Shape::one_of(std::vector<std::string> values) {
    Shape s(Kind::Enum);
    s.values_ = std::move(values);
    return s;
}

Shape Shape::text_list(std::size_t min_items, std::size_t max_items) {
    Shape s(Kind::TextList);
    s.min_items_ = min_items;
    s.max_items_ = max_items;
    return s;
}

Shape Shape::object(std::vector<Field> fields) {
    Shape s(Kind::Object);
    s.fields_ = std::move(fields);
    return s;
}

Shape Shape::list_of(Shape item, std::size_t min_items, std::size_t max_items) {
    Shape s(Kind::List);
    s.item_ = std::make_shared<const Shape>(std::move(item));
    s.min_items_ = min_items;
    s.max_items_ = max_items;
    return s;
}

Shape::Field Shape::field(std::string name, Shape shape, bool required) {
    return Field{std::move(name), std::make_shared<const Shape>(std::move(shape)), required};
}

namespace {

void check_count(std::size_t n, std::size_t lo, std::size_t hi, const std::string& path,
                 std::vector<std::string>& violations) {
    if (n < lo || n > hi) {
        std::ostringstream os;
        os << path << ": expected ";
        if (lo == hi) {
            os << lo;
        } else if (hi == std::numeric_limits<std::size_t>::max()) {
            os << "at least " << lo;
        } else {
            os << lo << ".." << hi;
        }
        os << " items, got " << n;
        violations.push_back(os.str());
    }
}

}  // namespace

void Shape::conform(nlohmann::json& value, const std::string& path, std::vector<std::string>& violations) const {
    switch (kind_) {
        case Kind::Text:
            if (!value.is_string()) {
                violations.push_back(path + ": expected text");
            } else if (!allow_empty_ && text::trim(value.get<std::string>()).empty()) {
                violations.push_back(path + ": empty text");
            }
            return;
        case Kind::Integer: {
            long long v = 0;
            if (value.is_number_integer()) {
                v = value.get<long long>();
            } else if (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>()) {
                v = static_cast<long long>(value.get<double>());
                value = v;
            } else {
                violations.push_back(path + ": expected integer");
                return;
            }
            if (v < min_ || v > max_) {
                violations.push_back(path + ": " + std::to_string(v) + " outside [" + std::to_string(min_) + ", " +
                                     std::to_string(max_) + "]");
            }
            return;
        }
        case Kind::Enum: {
            if (!value.is_string()) {
                violations.push_back(path + ": expected one of " + describe());
                return;
            }
            const auto got = text::to_lower(text::trim(value.get<std::string>()));
            const auto it = std::find_if(values_.begin(), values_.end(),
                                         [&](const std::string& v) { return text::to_lower(v) == got; });
            if (it == values_.end()) {
                violations.push_back(path + ": '" + value.get<std::string>() + "' not in " + describe());
            } else {
                value = *it;
            }
            return;
        }
        case Kind::TextList: {
            if (!value.is_array()) {
                violations.push_back(path + ": expected list of text");
                return;
            }
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (!value[i].is_string() || text::trim(value[i].get<std::string>()).empty()) {
                    violations.push_back(path + "[" + std::to_string(i) + "]: expected non-empty text");
                }
            }
            check_count(value.size(), min_items_, max_items_, path, violations);
            return;
        }
        case Kind::List: {
            if (!value.is_array()) {
                violations.push_back(path + ": expected list");
                return;
            }
            for (std::size_t i = 0; i < value.size(); ++i) {
                item_->conform(value[i], path + "[" + std::to_string(i) + "]", violations);
            }
            check_count(value.size(), min_items_, max_items_, path, violations);
            return;
        }
        case Kind::Object: {
            if (!value.is_object()) {
                violations.push_back(path + ": expected object");
                return;
            }
            for (const auto& f : fields_) {
                const auto child = path.empty() ? f.name : path + "." + f.name;
                auto it = value.find(f.name);
                if (it == value.end() || it->is_null()) {
                    if (f.required) violations.push_back(child + ": missing");
                    continue;
                }
                f.shape->conform(*it, child, violations);
            }
            return;
        }
    }
}

std::vector<std::string> Shape::conform(nlohmann::json& value) const {
    std::vector<std::string> violations;
    conform(value, "", violations);
    for (auto& v : violations) {
        if (!v.empty() && v.front() == ':') v = "<root>" + v;
    }
    return violations;
}

std::string Shape::describe() const {
    switch (kind_) {
        case Kind::Text: return "\"<text>\"";
        case Kind::Integer: return "<integer " + std::to_string(min_) + ".." + std::to_string(max_) + ">";
        case Kind::Enum: {
            std::string out;
            for (std::size_t i = 0; i < values_.size(); ++i) {
                if (i) out += " | ";
                out += "\"" + values_[i] + "\"";
            }
            return out;
        }
        case Kind::TextList: return "[\"<text>\", ...]";
        case Kind::List: return "[" + item_->describe() + ", ...]";
        case Kind::Object: {
            std::string out = "{";
            for (std::size_t i = 0; i < fields_.size(); ++i) {
                if (i) out += ", ";
                out += "\"" + fields_[i].name + "\": " + fields_[i].shape->describe();
            }
            return out + "}";
        }
    }
    return {};
}

namespace {

std::optional<nlohmann::json> try_parse(std::string_view s) {
    auto parsed = nlohmann::json::parse(s.begin(), s.end(), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

}  // namespace

std::optional<nlohmann::json> extract_json(std::string_view raw, const Shape& shape) {
    const auto trimmed = text::trim(raw);
    if (auto whole = try_parse(trimmed); whole && whole->is_object()) return whole;

    if (auto fence = trimmed.find("```"); fence != std::string::npos) {
        auto body_start = trimmed.find('\n', fence);
        auto close = body_start == std::string::npos ? std::string::npos : trimmed.find("```", body_start);
        if (close != std::string::npos) {
            if (auto fenced = try_parse(trimmed.substr(body_start + 1, close - body_start - 1));
                fenced && fenced->is_object()) {
                return fenced;
            }
        }
    }

    const auto open = trimmed.find('{');
    const auto close = trimmed.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        if (auto span = try_parse(std::string_view(trimmed).substr(open, close - open + 1)); span && span->is_object()) {
            return span;
        }
    }

    if (shape.kind() == Shape::Kind::Object) {
        const Shape::Field* only = nullptr;
        for (const auto& f : shape.fields()) {
            if (!f.required) continue;
            if (only) return std::nullopt;
            only = &f;
        }
        if (only && only->shape->kind() == Shape::Kind::Enum) {
            std::string bare = trimmed;
            bare.erase(std::remove_if(bare.begin(), bare.end(),
                                      [](char c) { return c == '"' || c == '\'' || c == '.' || c == '*'; }),
                       bare.end());
            bare = text::to_lower(text::trim(bare));
            for (const auto& v : only->shape->enum_values()) {
                if (text::to_lower(v) == bare) return nlohmann::json{{only->name, v}};
            }
        }
    }
    return std::nullopt;
}

}  // namespace ed2d
