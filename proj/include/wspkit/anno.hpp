#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wspkit/skeleton.hpp"

namespace wspkit {

struct PersonInstance {
  std::int64_t person_id = 0;
  std::vector<std::array<double, 2>> joints;  // image-frame (x, y), length J
  std::vector<Visibility> visibility;         // length J
  std::array<double, 4> bbox{};               // x, y, w, h

  bool annotated(int joint) const { return visibility[joint] != Visibility::absent; }
};

struct ImageAnnotation {
  std::int64_t image_id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  std::vector<PersonInstance> persons;
};

// Parses a COCO-keypoints-style document: a top-level object with "images"
// and "annotations" arrays, keypoints as flat x,y,v triples (v: 0 absent,
// 1 occluded, 2 visible) and bbox as [x,y,w,h]. Annotations with a keypoint
// count other than 3*J, an unknown image_id, or a degenerate bbox are
// rejected and reported through `rejects`. Output is sorted by image_id;
// person order within an image follows the document.
std::vector<ImageAnnotation> parse_annotation_doc(std::string_view bytes,
                                                  const SkeletonSpec& source_skeleton,
                                                  std::vector<std::string>* rejects = nullptr);

// Reorders joints into the canonical skeleton. Canonical joints without a
// source index are synthesized (head rule, see skeleton.hpp) and flagged
// occluded; mapped joints keep their coordinates exactly. Throws DataError
// when an ankle cannot be mapped.
PersonInstance remap_skeleton(const PersonInstance& p, const JointMapping& mapping,
                              const SkeletonSpec& canonical);

bool has_annotated_ankle(const PersonInstance& p, const SkeletonSpec& skeleton);

// Keeps the images that still have >= 2 persons after dropping persons
// without an annotated (visible or occluded) ankle. Order is preserved.
std::vector<ImageAnnotation> filter_eligible(std::vector<ImageAnnotation> images,
                                             const SkeletonSpec& skeleton);

// Canonical manifest: one self-contained JSON image record per line, stable
// field order, coordinates round-tripped exactly.
std::string manifest_record(const ImageAnnotation& image);
ImageAnnotation parse_manifest_record(const std::string& line);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ImageAnnotation>& images);
std::vector<ImageAnnotation> read_manifest(const std::filesystem::path& path);

// MPII ships a MATLAB struct annotation file; converting it is out of scope.
// Export it to the COCO-style JSON layout above (e.g. with scipy.io) and
// feed that through parse_annotation_doc. This stub only documents the gap.
[[noreturn]] std::vector<ImageAnnotation> parse_mpii_annotation_doc(std::string_view bytes);

}  // namespace wspkit
