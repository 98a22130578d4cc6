#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soilmark/catalog.hpp"

namespace soilmark {

struct StacSearchOptions {
  int page_limit = 100;      // items per page requested from the server
  int timeout_seconds = 30;
};

// Runs a STAC Item Search (POST {endpoint}/search) per (window x year)
// interval with bbox and eo:cloud_cover constraints, following rel="next"
// pagination links until exhausted. Results are deduplicated by scene id and
// returned in canonical (acquired_at, scene_id) order with remote asset URLs.
// Throws HttpError on transport/status failures, MalformedResponse when the
// payload is not a STAC FeatureCollection.
std::vector<SceneRecord> stac_search(const std::string& endpoint,
                                     const FilterSpec& spec,
                                     const StacSearchOptions& options = {});

// Downloads every remote asset of the record into dest/<scene_id>/, returning
// a record whose band_files point at the local copies. A record without
// remote assets is returned unchanged. Partial downloads are removed before
// an error is rethrown.
SceneRecord fetch_assets(const SceneRecord& record,
                         const std::filesystem::path& dest,
                         const StacSearchOptions& options = {});

}  // namespace soilmark
