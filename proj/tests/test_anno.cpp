#include <doctest.h>

#include <filesystem>

#include "wspkit/anno.hpp"
#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"

using namespace wspkit;

namespace {

std::string fixture_text() {
  static const std::string text =
      read_file(std::filesystem::path(WSPKIT_TEST_DATA_DIR) / "coco_fixture.json");
  return text;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wspkit_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("fixture corpus parses to hand-counted totals") {
  auto images = parse_annotation_doc(fixture_text(), coco_skeleton());
  REQUIRE(images.size() == 3);
  CHECK(images[0].persons.size() == 3);
  CHECK(images[1].persons.size() == 2);
  CHECK(images[2].persons.size() == 2);
  // triples mapped to joints/visibility (hand-read from the committed file)
  const PersonInstance& p101 = images[0].persons[0];
  CHECK(p101.person_id == 101);
  CHECK(p101.joints[coco_skeleton().left_ankle][0] == doctest::Approx(117.2));
  CHECK(p101.joints[coco_skeleton().left_ankle][1] == doctest::Approx(441.0));
  CHECK(p101.visibility[coco_skeleton().left_ankle] == Visibility::visible);
  const PersonInstance& p103 = images[0].persons[2];
  CHECK(p103.visibility[coco_skeleton().left_ankle] == Visibility::absent);
  CHECK(p103.joints[coco_skeleton().left_ankle][0] == 0.0);
}

TEST_CASE("direct field mapping of one annotation") {
  const std::string doc = R"({
    "images": [{"image_id": 9, "width": 300, "height": 300, "file_name": "x.jpg"}],
    "annotations": [{"annotation_id": 1, "image_id": 9,
      "keypoints": [100,200,2, 0,0,0, 10,20,1, 30,40,2],
      "bbox": [0,0,120,220]}]
  })";
  SkeletonSpec tiny;
  tiny.joint_names = {"a", "b", "c", "d"};
  tiny.left_ankle = 0;
  tiny.right_ankle = 1;
  tiny.head_top = 2;
  tiny.head_down = 3;
  auto images = parse_annotation_doc(doc, tiny);
  REQUIRE(images.size() == 1);
  const auto& p = images[0].persons.at(0);
  CHECK(p.joints[0][0] == 100.0);
  CHECK(p.joints[0][1] == 200.0);
  CHECK(p.visibility[0] == Visibility::visible);
  CHECK(p.visibility[1] == Visibility::absent);
  CHECK(p.visibility[2] == Visibility::occluded);
}

TEST_CASE("empty annotations give empty persons everywhere") {
  const std::string doc = R"({
    "images": [{"image_id": 1, "width": 10, "height": 10, "file_name": "a"}],
    "annotations": []
  })";
  auto images = parse_annotation_doc(doc, coco_skeleton());
  REQUIRE(images.size() == 1);
  CHECK(images[0].persons.empty());
  CHECK(filter_eligible(images, canonical_skeleton()).empty());
}

TEST_CASE("rejections report the annotation id") {
  const std::string doc = R"({
    "images": [{"image_id": 1, "width": 100, "height": 100, "file_name": "a"}],
    "annotations": [
      {"annotation_id": 11, "image_id": 1, "keypoints": [1,2,2, 3,4,2], "bbox": [0,0,10,10]},
      {"annotation_id": 12, "image_id": 77, "keypoints": [1,2,2, 3,4,2, 5,6,2, 7,8,2], "bbox": [0,0,10,10]},
      {"annotation_id": 13, "image_id": 1, "keypoints": [1,2,2, 3,4,2, 5,6,2, 7,8,2], "bbox": [0,0,0,10]}
    ]
  })";
  SkeletonSpec tiny;
  tiny.joint_names = {"a", "b", "c", "d"};
  tiny.left_ankle = 0;
  tiny.right_ankle = 1;
  tiny.head_top = 2;
  tiny.head_down = 3;
  std::vector<std::string> rejects;
  auto images = parse_annotation_doc(doc, tiny, &rejects);
  CHECK(images[0].persons.empty());
  REQUIRE(rejects.size() == 3);
  CHECK(rejects[0].find("11") != std::string::npos);  // keypoints length
  CHECK(rejects[1].find("12") != std::string::npos);  // unknown image
  CHECK(rejects[2].find("13") != std::string::npos);  // degenerate bbox
}

TEST_CASE("malformed document reports a byte offset") {
  try {
    parse_annotation_doc("{\"images\": [", coco_skeleton());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("remap: identity mapping is the identity") {
  auto images = parse_annotation_doc(fixture_text(), coco_skeleton());
  const auto& p = images[0].persons[0];
  PersonInstance q = remap_skeleton(p, identity_mapping(coco_skeleton()), coco_skeleton());
  CHECK(q.joints == p.joints);
  CHECK(q.visibility == p.visibility);
  CHECK(q.bbox == p.bbox);
}

TEST_CASE("remap: coco to canonical synthesizes head joints, keeps values exact") {
  auto images = parse_annotation_doc(fixture_text(), coco_skeleton());
  const auto& canon = canonical_skeleton();
  // annotation 301: nose (110,126), shoulders (125,169.2) (95,169.2)
  const PersonInstance& src = images[2].persons[0];
  PersonInstance p = remap_skeleton(src, coco_to_canonical(), canon);
  REQUIRE(p.joints.size() == 17);
  // mapped joints keep coordinates bit-exactly
  CHECK(p.joints[canon.left_ankle] == src.joints[coco_skeleton().left_ankle]);
  CHECK(p.joints[2] == src.joints[0]);  // nose
  // head_down = shoulder midpoint, flagged occluded
  CHECK(p.joints[canon.head_down][0] == doctest::Approx(110.0));
  CHECK(p.joints[canon.head_down][1] == doctest::Approx(169.2));
  CHECK(p.visibility[canon.head_down] == Visibility::occluded);
  // head_top = nose + 0.5*(nose - head_down)
  CHECK(p.joints[canon.head_top][0] == doctest::Approx(110.0));
  CHECK(p.joints[canon.head_top][1] == doctest::Approx(126.0 - 0.5 * 43.2));
  CHECK(p.visibility[canon.head_top] == Visibility::occluded);
}

TEST_CASE("remap: permuted source order restores canonical positions") {
  PersonInstance p;
  p.person_id = 5;
  p.bbox = {0, 0, 10, 10};
  p.joints = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  p.visibility = {Visibility::visible, Visibility::visible, Visibility::occluded,
                  Visibility::visible};
  SkeletonSpec canon;
  canon.joint_names = {"a", "b", "c", "d"};
  canon.left_ankle = 0;
  canon.right_ankle = 1;
  canon.head_top = 2;
  canon.head_down = 3;
  JointMapping perm;
  perm.source_index_of_canonical = {2, 0, 3, 1};
  PersonInstance q = remap_skeleton(p, perm, canon);
  CHECK(q.joints[0] == p.joints[2]);
  CHECK(q.joints[1] == p.joints[0]);
  CHECK(q.joints[2] == p.joints[3]);
  CHECK(q.joints[3] == p.joints[1]);
  CHECK(q.visibility[0] == Visibility::occluded);
}

TEST_CASE("remap: unmappable ankles reject the instance") {
  PersonInstance p;
  p.joints = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  p.visibility.assign(4, Visibility::visible);
  p.bbox = {0, 0, 5, 5};
  SkeletonSpec canon;
  canon.joint_names = {"la", "ra", "ht", "hd"};
  canon.left_ankle = 0;
  canon.right_ankle = 1;
  canon.head_top = 2;
  canon.head_down = 3;
  JointMapping m;
  m.source_index_of_canonical = {-1, -1, 2, 3};
  CHECK_THROWS_AS(remap_skeleton(p, m, canon), DataError);
}

TEST_CASE("filter_eligible applies both rules") {
  auto images = parse_annotation_doc(fixture_text(), coco_skeleton());
  std::vector<ImageAnnotation> canonical;
  for (auto& img : images) {
    ImageAnnotation c = img;
    c.persons.clear();
    for (const auto& p : img.persons)
      c.persons.push_back(remap_skeleton(p, coco_to_canonical(), canonical_skeleton()));
    canonical.push_back(std::move(c));
  }
  auto kept = filter_eligible(canonical, canonical_skeleton());
  // image 1: person 103 lacks ankles -> kept with 2; image 2: only one
  // eligible person -> dropped; image 3: kept with 2.
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].image_id == 1);
  CHECK(kept[0].persons.size() == 2);
  CHECK(kept[1].image_id == 3);
  CHECK(kept[1].persons.size() == 2);
  // occluded ankles count as annotated (person 102 survives)
  CHECK(kept[0].persons[1].person_id == 102);
  // output is a subsequence: every surviving person has an annotated ankle
  for (const auto& img : kept)
    for (const auto& p : img.persons) CHECK(has_annotated_ankle(p, canonical_skeleton()));
}

TEST_CASE("single-person image is excluded") {
  ImageAnnotation img;
  img.image_id = 1;
  img.width = img.height = 100;
  PersonInstance p;
  p.joints.assign(17, {5, 5});
  p.visibility.assign(17, Visibility::visible);
  p.bbox = {0, 0, 10, 10};
  img.persons = {p};
  CHECK(filter_eligible({img}, canonical_skeleton()).empty());
}

TEST_CASE("manifest round trip is a fixpoint after one serialization") {
  auto images = parse_annotation_doc(fixture_text(), coco_skeleton());
  auto path1 = temp_file("manifest1.jsonl");
  auto path2 = temp_file("manifest2.jsonl");
  write_manifest(path1, images);
  auto back = read_manifest(path1);
  REQUIRE(back.size() == images.size());
  write_manifest(path2, back);
  CHECK(read_file(path1) == read_file(path2));
  // coordinates survive exactly
  CHECK(back[0].persons[0].joints == images[0].persons[0].joints);
}

TEST_CASE("mpii ingestion is a documented stub") {
  CHECK_THROWS_AS(parse_mpii_annotation_doc("anything"), DataError);
}
