#pragma once

#include <array>
#include <string>
#include <vector>

#include "rulearn/environment.hpp"

namespace rulearn {

enum class PaintingType { Oil, Acrylic, Watercolor };

constexpr std::array<PaintingType, 3> kAllPaintingTypes = {
    PaintingType::Oil, PaintingType::Acrylic, PaintingType::Watercolor};

enum class PaintColor { Red, Blue, Green, Yellow, White, Black };

constexpr std::array<PaintColor, 6> kPalette = {PaintColor::Red,    PaintColor::Blue,
                                                PaintColor::Green,  PaintColor::Yellow,
                                                PaintColor::White,  PaintColor::Black};

std::string to_string(PaintingType type);
PaintingType painting_type_from_string(const std::string& s);
std::string to_string(PaintColor color);
PaintColor paint_color_from_string(const std::string& s);

struct Painting {
    std::string id;
    PaintingType type = PaintingType::Oil;
    PaintColor color = PaintColor::Red;
};

struct ReDifficulty {
    int painting_count = 6;
    int color_count = 3;
};

class RoomEscapeEnv : public Environment {
public:
    RoomEscapeEnv(std::vector<Painting> paintings, std::vector<PaintColor> rotation_order,
                  PaintColor initial_active_color, std::uint64_t seed);

    static std::unique_ptr<RoomEscapeEnv> from_json(const json& j);

    std::string family() const override { return "room_escape"; }
    std::uint64_t seed() const override { return seed_; }
    std::string goal_text() const override;
    std::string rule_text() const override;
    json disclosed_json() const override;
    json rule_json() const override;
    std::vector<ObjectView> objects() const override;
    Feedback perceive(const std::string& object_id) const override;
    Feedback apply(const std::string& object_id, const std::string& action_name,
                   const ActionInput& input) override;
    bool solved() const override;
    json to_json() const override;
    std::unique_ptr<Environment> clone() const override;

    const std::vector<Painting>& paintings() const { return paintings_; }
    const std::vector<PaintColor>& rotation_order() const { return rotation_order_; }
    PaintColor active_color() const { return rotation_order_[active_index_]; }
    int failed_attempts_since_rotation() const { return failed_attempts_; }

    // Digits are active-color painting counts in the order Oil, Acrylic,
    // Watercolor. Internal oracle; never exposed through an action.
    DigitTriple derive_password() const;
    DigitTriple count_triple(PaintColor color) const;

private:
    std::vector<Painting> paintings_;
    std::vector<PaintColor> rotation_order_;
    size_t active_index_ = 0;
    PaintColor initial_active_color_ = PaintColor::Red;
    int failed_attempts_ = 0;
    std::uint64_t seed_ = 0;
    bool solved_ = false;
};

std::unique_ptr<RoomEscapeEnv> generate_re_puzzle(std::uint64_t seed,
                                                  const ReDifficulty& difficulty);

}  // namespace rulearn
