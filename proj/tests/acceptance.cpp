#include "twics/twics.hpp"
int main(){return 0;}
