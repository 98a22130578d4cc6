#include "soilmark/stac.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "soilmark/datetime.hpp"

namespace soilmark {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/', possibly with query
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("URL must include a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string body_excerpt(const std::string& body) {
  std::string s = body.substr(0, 160);
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

json parse_page(const httplib::Result& res, const std::string& where) {
  if (!res) {
    throw HttpError(0, "no response from " + where + " (" +
                           httplib::to_string(res.error()) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw HttpError(res->status, "STAC search returned status " +
                                     std::to_string(res->status) + ": " +
                                     body_excerpt(res->body));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("STAC response is not JSON: ") + e.what());
  }
}

std::string url_encode(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' ||
        c == ',') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

// POST body first; servers without POST search (405/404) get the GET form
// with core parameters in the query string.
json run_search(const std::string& base, const std::string& path,
                const json& body, int timeout_seconds) {
  httplib::Client client(base);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  auto res = client.Post(path, body.dump(), "application/json");
  if (res && (res->status == 405 || res->status == 404)) {
    std::string query = "?limit=" + std::to_string(body.value("limit", 100));
    if (body.contains("bbox")) {
      std::string bbox;
      for (const auto& v : body.at("bbox")) {
        if (!bbox.empty()) bbox += ',';
        bbox += std::to_string(v.get<double>());
      }
      query += "&bbox=" + url_encode(bbox);
    }
    if (body.contains("datetime")) {
      query += "&datetime=" + url_encode(body.at("datetime").get<std::string>());
    }
    auto got = client.Get(path + query);
    return parse_page(got, base + path + query);
  }
  return parse_page(res, base + path);
}

SceneRecord record_from_item(const json& item, int default_epsg) {
  if (!item.is_object() || !item.contains("id")) {
    throw MalformedResponse("STAC item without id");
  }
  SceneRecord rec;
  rec.scene_id = item.at("id").get<std::string>();

  if (!item.contains("properties") || !item.at("properties").is_object()) {
    throw MalformedResponse("STAC item '" + rec.scene_id + "' lacks properties");
  }
  const json& props = item.at("properties");
  if (!props.contains("datetime") || !props.at("datetime").is_string()) {
    throw MalformedResponse("STAC item '" + rec.scene_id + "' lacks datetime");
  }
  try {
    rec.acquired_at = parse_rfc3339(props.at("datetime").get<std::string>());
  } catch (const InvalidArgument& e) {
    throw MalformedResponse("STAC item '" + rec.scene_id + "': " + e.what());
  }
  if (auto cc = props.find("eo:cloud_cover"); cc != props.end() && cc->is_number()) {
    rec.cloud_cover_pct = cc->get<double>();
  }

  if (item.contains("bbox") && item.at("bbox").is_array() &&
      item.at("bbox").size() >= 4) {
    const json& b = item.at("bbox");
    rec.footprint.min_x = b[0].get<double>();
    rec.footprint.min_y = b[1].get<double>();
    rec.footprint.max_x = b[2].get<double>();
    rec.footprint.max_y = b[3].get<double>();
  }
  rec.footprint.epsg = default_epsg;
  if (auto pe = props.find("proj:epsg"); pe != props.end() && pe->is_number()) {
    rec.footprint.epsg = pe->get<int>();
  }

  if (item.contains("assets") && item.at("assets").is_object()) {
    for (auto it = item.at("assets").begin(); it != item.at("assets").end(); ++it) {
      const std::string& key = it.key();
      bool known_band = false;
      for (const auto& b : sentinel2_bands()) {
        if (b.name == key) {
          known_band = true;
          break;
        }
      }
      if (!known_band) continue;
      if (it.value().is_object() && it.value().contains("href")) {
        rec.band_urls[key] = it.value().at("href").get<std::string>();
      }
    }
  }
  return rec;
}

}  // namespace

std::vector<SceneRecord> stac_search(const std::string& endpoint,
                                     const FilterSpec& spec,
                                     const StacSearchOptions& options) {
  SplitUrl url = split_url(endpoint);
  std::string search_path = url.path;
  if (search_path.back() == '/') search_path.pop_back();
  search_path += "/search";

  std::vector<SceneRecord> out;
  std::set<std::string> seen;

  for (int year = spec.years.first; year <= spec.years.last; ++year) {
    for (const auto& w : spec.windows) {
      json body;
      body["bbox"] = {spec.roi.min_x, spec.roi.min_y, spec.roi.max_x, spec.roi.max_y};
      char from[32], to[32];
      std::snprintf(from, sizeof from, "%04d-%02d-%02dT00:00:00Z", year,
                    w.start_month, w.start_day);
      std::snprintf(to, sizeof to, "%04d-%02d-%02dT23:59:59Z", year, w.end_month,
                    w.end_day);
      body["datetime"] = std::string(from) + "/" + to;
      body["limit"] = options.page_limit;
      body["query"]["eo:cloud_cover"]["lte"] = spec.max_cloud_pct;

      json request = body;
      json page = run_search(url.base, search_path, request, options.timeout_seconds);
      while (true) {
        if (!page.is_object() || !page.contains("features") ||
            !page.at("features").is_array()) {
          throw MalformedResponse("STAC response lacks a features array");
        }
        for (const auto& item : page.at("features")) {
          SceneRecord rec = record_from_item(item, spec.roi.epsg);
          // the GET fallback cannot express the cloud query; enforce it here
          if (rec.cloud_cover_pct > spec.max_cloud_pct) continue;
          if (seen.insert(rec.scene_id).second) out.push_back(std::move(rec));
        }
        // follow rel="next": either a POST body or a GET href
        const json* next = nullptr;
        if (page.contains("links") && page.at("links").is_array()) {
          for (const auto& link : page.at("links")) {
            if (link.is_object() && link.value("rel", "") == "next") {
              next = &link;
              break;
            }
          }
        }
        if (!next) break;
        if (next->contains("body") && next->at("body").is_object()) {
          request = next->at("body");
          page = run_search(url.base, search_path, request, options.timeout_seconds);
        } else if (next->contains("href") && next->at("href").is_string()) {
          SplitUrl next_url = split_url(next->at("href").get<std::string>());
          httplib::Client client(next_url.base);
          client.set_connection_timeout(options.timeout_seconds, 0);
          client.set_read_timeout(options.timeout_seconds, 0);
          page = parse_page(client.Get(next_url.path), next_url.base + next_url.path);
        } else {
          throw MalformedResponse("next link carries neither body nor href");
        }
      }
    }
  }

  sort_canonical(out);
  return out;
}

SceneRecord fetch_assets(const SceneRecord& record,
                         const std::filesystem::path& dest,
                         const StacSearchOptions& options) {
  if (record.band_urls.empty()) return record;

  SceneRecord out = record;
  std::filesystem::path scene_dir = dest / record.scene_id;
  std::filesystem::create_directories(scene_dir);

  std::vector<std::filesystem::path> downloaded;
  auto cleanup = [&]() {
    for (const auto& p : downloaded) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  };

  try {
    for (const auto& [band, asset_url] : record.band_urls) {
      SplitUrl url = split_url(asset_url);
      httplib::Client client(url.base);
      client.set_connection_timeout(options.timeout_seconds, 0);
      client.set_read_timeout(options.timeout_seconds, 0);

      std::filesystem::path target = scene_dir / (band + ".tif");
      std::filesystem::path partial = target;
      partial += ".part";
      downloaded.push_back(partial);

      std::ofstream file(partial, std::ios::binary | std::ios::trunc);
      if (!file) throw IoError("cannot create " + partial.string());
      auto res = client.Get(url.path, [&](const char* data, size_t len) {
        file.write(data, static_cast<std::streamsize>(len));
        return file.good();
      });
      file.close();
      if (!res) {
        throw HttpError(0, "download of " + asset_url + " failed (" +
                               httplib::to_string(res.error()) + ")");
      }
      if (res->status != 200) {
        throw HttpError(res->status, "download of " + asset_url +
                                         " returned status " +
                                         std::to_string(res->status));
      }
      std::filesystem::rename(partial, target);
      downloaded.back() = target;
      out.band_files[band] = target.string();
    }
  } catch (...) {
    cleanup();
    throw;
  }
  return out;
}

}  // namespace soilmark
