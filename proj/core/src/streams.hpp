#pragma once

// Stream labels for rng_derive. Changing any of these changes every seeded
// result, so they are kept in one place.

#include <string>
#include <string_view>

namespace gml::streams {

inline std::string init_site(std::string_view site_id) { return "init/site/" + std::string(site_id); }
inline std::string init_global() { return "init/global"; }

inline std::string local_epoch(std::string_view site_id, int round, int epoch) {
  return "train/site/" + std::string(site_id) + "/round/" + std::to_string(round) + "/epoch/" + std::to_string(epoch);
}

inline std::string protocol(int round) { return "protocol/round/" + std::to_string(round); }

inline std::string mutual(int round, int receiver, int sender, int epoch) {
  return "mutual/round/" + std::to_string(round) + "/receiver/" + std::to_string(receiver) + "/sender/" +
         std::to_string(sender) + "/epoch/" + std::to_string(epoch);
}

inline std::string site_data(std::string_view site_id) { return "data/site/" + std::string(site_id); }
inline std::string heldout_data(std::string_view site_id) { return "data/heldout/" + std::string(site_id); }
inline std::string split(std::string_view site_id) { return "split/site/" + std::string(site_id); }

}  // namespace gml::streams
