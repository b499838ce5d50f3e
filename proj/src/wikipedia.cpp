#include <httplib.h>

#include <map>

#include "ed2d/error.hpp"
#include "ed2d/evidence.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

WikipediaSource::WikipediaSource(WikipediaOptions options)
    : options_(std::move(options)), limiter_(options_.requests_per_second) {
    const auto scheme_end = options_.api_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidConfig, "api_url needs a scheme");
    const auto path_start = options_.api_url.find('/', scheme_end + 3);
    scheme_host_port_ = options_.api_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : options_.api_url.substr(path_start);
}

namespace {

nlohmann::json get_json(httplib::Client& client, const std::string& path, const httplib::Params& params,
                        const httplib::Headers& headers) {
    auto res = client.Get(path, params, headers);
    if (!res) throw Error(ErrorKind::BackendUnreachable, "wikipedia: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw Error(ErrorKind::BackendRejected, "wikipedia: HTTP " + std::to_string(res->status), {res->body});
    }
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::BackendRejected, "wikipedia: reply is not JSON");
    return doc;
}

}  // namespace

std::vector<SearchHit> WikipediaSource::search(const std::string& phrase, int k) {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    const httplib::Headers headers{{"User-Agent", options_.user_agent}};

    limiter_.acquire();
    const auto found = get_json(client, path_,
                                {{"action", "query"},
                                 {"list", "search"},
                                 {"srsearch", phrase},
                                 {"srlimit", std::to_string(k)},
                                 {"format", "json"},
                                 {"utf8", "1"}},
                                headers);

    std::vector<SearchHit> hits;
    std::vector<std::string> page_ids;
    const auto results = found.value("/query/search"_json_pointer, nlohmann::json::array());
    for (const auto& r : results) {
        if (static_cast<int>(hits.size()) == k) break;
        const auto page_id = std::to_string(r.value("pageid", 0LL));
        hits.push_back(SearchHit{r.value("title", std::string{}), text::strip_markup(r.value("snippet", std::string{})),
                                 scheme_host_port_ + "/?curid=" + page_id});
        page_ids.push_back(page_id);
    }
    if (hits.empty()) return hits;

    std::string joined;
    for (const auto& id : page_ids) joined += (joined.empty() ? "" : "|") + id;
    limiter_.acquire();
    try {
        const auto pages = get_json(client, path_,
                                    {{"action", "query"},
                                     {"prop", "extracts"},
                                     {"exintro", "1"},
                                     {"explaintext", "1"},
                                     {"pageids", joined},
                                     {"format", "json"},
                                     {"utf8", "1"}},
                                    headers);
        const auto page_map = pages.value("/query/pages"_json_pointer, nlohmann::json::object());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            auto it = page_map.find(page_ids[i]);
            if (it == page_map.end()) continue;
            auto extract = text::trim(it->value("extract", std::string{}));
            if (!extract.empty()) hits[i].snippet = std::move(extract);
        }
    } catch (const Error&) {
        // Search snippets remain usable segments when the extract call fails.
    }
    return hits;
}

}  // namespace ed2d
