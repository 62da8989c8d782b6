#include "wspkit/anno.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"
#include "json_util.hpp"

namespace wspkit {

using ordered_json = nlohmann::ordered_json;

std::vector<ImageAnnotation> parse_annotation_doc(std::string_view bytes,
                                                  const SkeletonSpec& source_skeleton,
                                                  std::vector<std::string>* rejects) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("annotation document parse error at byte " + std::to_string(e.byte) + ": " +
                    e.what());
  }
  if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations"))
    throw DataError("annotation document must be an object with 'images' and 'annotations'");

  auto reject = [&](const std::string& msg) {
    if (rejects) rejects->push_back(msg);
  };

  std::map<std::int64_t, ImageAnnotation> by_id;
  for (const auto& im : doc.at("images")) {
    ImageAnnotation ia;
    ia.image_id = im.at("image_id").get<std::int64_t>();
    ia.width = im.at("width").get<int>();
    ia.height = im.at("height").get<int>();
    ia.file_name = im.at("file_name").get<std::string>();
    if (ia.width <= 0 || ia.height <= 0)
      throw DataError("image " + std::to_string(ia.image_id) + ": non-positive dimensions");
    by_id[ia.image_id] = std::move(ia);
  }

  const int j = source_skeleton.joint_count();
  for (const auto& an : doc.at("annotations")) {
    const auto ann_id = an.at("annotation_id").get<std::int64_t>();
    const auto image_id = an.at("image_id").get<std::int64_t>();
    auto img_it = by_id.find(image_id);
    if (img_it == by_id.end()) {
      reject("annotation " + std::to_string(ann_id) + ": unknown image_id " +
             std::to_string(image_id));
      continue;
    }
    const auto& kps = an.at("keypoints");
    if (static_cast<int>(kps.size()) != 3 * j) {
      reject("annotation " + std::to_string(ann_id) + ": keypoints length " +
             std::to_string(kps.size()) + " != 3*" + std::to_string(j));
      continue;
    }
    const auto& bbox = an.at("bbox");
    PersonInstance p;
    p.person_id = ann_id;
    p.bbox = {bbox.at(0).get<double>(), bbox.at(1).get<double>(), bbox.at(2).get<double>(),
              bbox.at(3).get<double>()};
    if (p.bbox[2] <= 0.0 || p.bbox[3] <= 0.0) {
      reject("annotation " + std::to_string(ann_id) + ": degenerate bbox");
      continue;
    }
    p.joints.resize(j);
    p.visibility.resize(j);
    bool bad_flag = false;
    for (int k = 0; k < j; ++k) {
      const double x = kps.at(3 * k).get<double>();
      const double y = kps.at(3 * k + 1).get<double>();
      const int v = kps.at(3 * k + 2).get<int>();
      if (v < 0 || v > 2) {
        bad_flag = true;
        break;
      }
      p.joints[k] = {x, y};
      Visibility vis = static_cast<Visibility>(v);
      // Visible joints must lie inside the image; demote strays to occluded
      // so they stay annotated without breaking the instance invariant.
      const auto& img = img_it->second;
      if (vis == Visibility::visible &&
          (x < 0.0 || y < 0.0 || x > img.width || y > img.height))
        vis = Visibility::occluded;
      p.visibility[k] = vis;
    }
    if (bad_flag) {
      reject("annotation " + std::to_string(ann_id) + ": visibility flag outside {0,1,2}");
      continue;
    }
    img_it->second.persons.push_back(std::move(p));
  }

  std::vector<ImageAnnotation> out;
  out.reserve(by_id.size());
  for (auto& [id, ia] : by_id) out.push_back(std::move(ia));
  return out;
}

PersonInstance remap_skeleton(const PersonInstance& p, const JointMapping& mapping,
                              const SkeletonSpec& canonical) {
  const int j = canonical.joint_count();
  if (static_cast<int>(mapping.source_index_of_canonical.size()) != j)
    throw DataError("joint mapping length does not match canonical skeleton");

  PersonInstance out;
  out.person_id = p.person_id;
  out.bbox = p.bbox;
  out.joints.assign(j, {0.0, 0.0});
  out.visibility.assign(j, Visibility::absent);

  for (int c = 0; c < j; ++c) {
    const int s = mapping.source_index_of_canonical[c];
    if (s < 0) continue;
    if (s >= static_cast<int>(p.joints.size()))
      throw DataError("joint mapping refers to source joint " + std::to_string(s) +
                      " beyond instance size");
    out.joints[c] = p.joints[s];
    out.visibility[c] = p.visibility[s];
  }

  auto find_canonical = [&](const std::string& name) {
    for (int c = 0; c < j; ++c)
      if (canonical.joint_names[c] == name) return c;
    return -1;
  };

  // head_down = shoulder midpoint, head_top = nose extended beyond itself by
  // half the nose-neck segment; both flagged occluded.
  if (mapping.source_index_of_canonical[canonical.head_down] < 0) {
    const int ls = find_canonical("left_shoulder");
    const int rs = find_canonical("right_shoulder");
    if (ls >= 0 && rs >= 0 && out.annotated(ls) && out.annotated(rs)) {
      out.joints[canonical.head_down] = {(out.joints[ls][0] + out.joints[rs][0]) / 2.0,
                                         (out.joints[ls][1] + out.joints[rs][1]) / 2.0};
      out.visibility[canonical.head_down] = Visibility::occluded;
    }
  }
  if (mapping.source_index_of_canonical[canonical.head_top] < 0) {
    const int nose = find_canonical("nose");
    const int hd = canonical.head_down;
    if (nose >= 0 && out.annotated(nose) && out.annotated(hd)) {
      out.joints[canonical.head_top] = {
          out.joints[nose][0] + 0.5 * (out.joints[nose][0] - out.joints[hd][0]),
          out.joints[nose][1] + 0.5 * (out.joints[nose][1] - out.joints[hd][1])};
      out.visibility[canonical.head_top] = Visibility::occluded;
    }
  }

  if (mapping.source_index_of_canonical[canonical.left_ankle] < 0 &&
      mapping.source_index_of_canonical[canonical.right_ankle] < 0)
    throw DataError("instance " + std::to_string(p.person_id) +
                    ": ankle joints unmappable, cannot participate in labeling");
  return out;
}

bool has_annotated_ankle(const PersonInstance& p, const SkeletonSpec& skeleton) {
  return p.annotated(skeleton.left_ankle) || p.annotated(skeleton.right_ankle);
}

std::vector<ImageAnnotation> filter_eligible(std::vector<ImageAnnotation> images,
                                             const SkeletonSpec& skeleton) {
  std::vector<ImageAnnotation> out;
  for (auto& img : images) {
    std::vector<PersonInstance> kept;
    for (auto& p : img.persons)
      if (has_annotated_ankle(p, skeleton)) kept.push_back(std::move(p));
    if (kept.size() >= 2) {
      img.persons = std::move(kept);
      out.push_back(std::move(img));
    }
  }
  return out;
}

namespace detail {

ordered_json person_to_json(const PersonInstance& p) {
  ordered_json jp;
  jp["person_id"] = p.person_id;
  jp["bbox"] = p.bbox;
  ordered_json joints = ordered_json::array();
  for (const auto& xy : p.joints) joints.push_back({xy[0], xy[1]});
  jp["joints"] = std::move(joints);
  ordered_json vis = ordered_json::array();
  for (Visibility v : p.visibility) vis.push_back(static_cast<int>(v));
  jp["visibility"] = std::move(vis);
  return jp;
}

PersonInstance person_from_json(const ordered_json& jp) {
  PersonInstance p;
  p.person_id = jp.at("person_id").get<std::int64_t>();
  const auto& bb = jp.at("bbox");
  p.bbox = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(),
            bb.at(3).get<double>()};
  for (const auto& xy : jp.at("joints"))
    p.joints.push_back({xy.at(0).get<double>(), xy.at(1).get<double>()});
  for (const auto& v : jp.at("visibility")) {
    int flag = v.get<int>();
    if (flag < 0 || flag > 2) throw DataError("manifest visibility flag outside {0,1,2}");
    p.visibility.push_back(static_cast<Visibility>(flag));
  }
  if (p.joints.size() != p.visibility.size())
    throw DataError("manifest person joints/visibility length mismatch");
  return p;
}

}  // namespace detail

using detail::person_from_json;
using detail::person_to_json;

std::string manifest_record(const ImageAnnotation& image) {
  ordered_json rec;
  rec["image_id"] = image.image_id;
  rec["width"] = image.width;
  rec["height"] = image.height;
  rec["file_name"] = image.file_name;
  ordered_json persons = ordered_json::array();
  for (const auto& p : image.persons) persons.push_back(person_to_json(p));
  rec["persons"] = std::move(persons);
  return rec.dump();
}

ImageAnnotation parse_manifest_record(const std::string& line) {
  ordered_json rec;
  try {
    rec = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("manifest record parse error at byte " + std::to_string(e.byte) + ": " +
                    e.what());
  }
  ImageAnnotation ia;
  ia.image_id = rec.at("image_id").get<std::int64_t>();
  ia.width = rec.at("width").get<int>();
  ia.height = rec.at("height").get<int>();
  ia.file_name = rec.at("file_name").get<std::string>();
  for (const auto& jp : rec.at("persons")) ia.persons.push_back(person_from_json(jp));
  return ia;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ImageAnnotation>& images) {
  std::string out;
  for (const auto& img : images) {
    out += manifest_record(img);
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<ImageAnnotation> read_manifest(const std::filesystem::path& path) {
  std::vector<ImageAnnotation> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(parse_manifest_record(line));
  }
  return out;
}

std::vector<ImageAnnotation> parse_mpii_annotation_doc(std::string_view) {
  throw DataError(
      "MPII annotations are distributed as a MATLAB struct; export them to the "
      "COCO-style JSON layout and use parse_annotation_doc instead");
}

}  // namespace wspkit
