// Copyright 2026 The Tilefuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TILEFUSE_MASK_H_
#define TILEFUSE_MASK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tilefuse/geometry.h"

namespace tilefuse {

// Dense binary grid, row-major, one byte per pixel (0 or 1).
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  std::uint64_t Count() const;

  bool operator==(const BitMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Uncompressed COCO-style run-length mask: pixels scanned column-major
// (index = x * height + y), runs alternate background/foreground starting
// with background. Only the leading count may be zero.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  std::uint64_t Area() const;
  // Throws InvalidArgument on a counts sum mismatch or an interior zero run.
  void Validate() const;

  bool operator==(const RleMask&) const = default;
};

RleMask RleEncode(const BitMask& grid);
BitMask RleDecode(const RleMask& mask);

// |a & b| / |a | b|, computed on the runs directly. 0 when both are empty.
// Throws InvalidArgument if the frames differ in size.
double MaskIou(const RleMask& a, const RleMask& b);

// A vertical foreground segment [y0, y1) in column x. Run lists are kept
// sorted by (x, y0) with no overlapping or touching segments in the same
// column, which makes them the frame-independent form of a mask.
struct ColumnRun {
  int x = 0;
  int y0 = 0;
  int y1 = 0;

  bool operator==(const ColumnRun&) const = default;
};

using RunList = std::vector<ColumnRun>;

// Foreground of `mask` placed with its frame origin at (origin_x, origin_y).
RunList RunsFromRle(const RleMask& mask, int origin_x = 0, int origin_y = 0);

// Encodes runs into a frame of the given size at (frame.x, frame.y). Runs
// must lie inside the frame.
RleMask RleFromRuns(std::span<const ColumnRun> runs, const Rect& frame);

RunList ClipRuns(std::span<const ColumnRun> runs, const Rect& clip);
RunList TranslateRuns(std::span<const ColumnRun> runs, int dx, int dy);

// Tight bounding rectangle; nullopt for an empty run list.
std::optional<Rect> RunsBounds(std::span<const ColumnRun> runs);
std::uint64_t RunsArea(std::span<const ColumnRun> runs);
std::uint64_t RunsIntersectionArea(std::span<const ColumnRun> a, std::span<const ColumnRun> b);

// Sorts and coalesces an arbitrary collection of segments (possibly
// overlapping, from several masks) into canonical form.
RunList NormalizeRuns(RunList runs);

}  // namespace tilefuse

#endif  // TILEFUSE_MASK_H_
