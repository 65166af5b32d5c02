# pk-design Tests
