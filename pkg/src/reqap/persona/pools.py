"""Bundled static entity pools for persona and event generation.

Pools are plain data so they can be swapped out wholesale. Names avoid
commas, apostrophes and semicolons: verbalization templates use those as
delimiters around embedded facts.
"""

FIRST_NAMES = (
    "Isabella", "Lucia", "Carla", "Robert", "Elena", "Marco", "Sofia", "Daniel",
    "Amara", "Felix", "Nora", "Tomas", "Priya", "Jonas", "Maya", "Victor",
    "Alma", "Hugo", "Ines", "Leo", "Greta", "Omar", "Stella", "Ravi",
)

LAST_NAMES = (
    "Hernandez", "Ruiz", "Diaz", "Keller", "Novak", "Larsen", "Moretti", "Okafor",
    "Tanaka", "Kovacs", "Bauer", "Lindgren", "Costa", "Haddad", "Petrov", "Quinn",
)

CITIES = (
    "Lisbon", "Heidelberg", "Graz", "Porto", "Utrecht", "Bologna", "Ghent",
    "Uppsala", "Valencia", "Bergen", "Leipzig", "Basel", "Nantes", "Krakow",
)

COMPANIES = (
    "Northwind Analytics", "Helios Labs", "Bluefjord Systems", "Kite Software",
    "Aurora Logistics", "Quantum Mill", "Cedarworks", "Atlas Foundry",
)

JOB_ROLES = ("Engineer", "Designer", "Analyst", "Researcher", "Consultant", "Teacher")

UNIVERSITIES = (
    "Riverside University", "Bergakademie College", "Atlantic Institute",
    "Meridian University", "Northgate Polytechnic",
)

PET_TYPES = ("dog", "cat", "parrot", "rabbit")

PET_NAMES = ("Biscuit", "Luna", "Pixel", "Mango", "Koda", "Willow")

MUSIC = {
    "indie rock": (
        ("Cosmic Funk", ("The Midnight Echoes",)),
        ("Paper Planes Over Water", ("Harbor Lights",)),
        ("Static Bloom", ("The Midnight Echoes", "Vera Moon")),
        ("Gravel Road Anthem", ("Foxglove Union",)),
        ("Neon Orchard", ("Harbor Lights",)),
        ("Silver Thread", ("Vera Moon",)),
        ("Last Train North", ("Foxglove Union", "Harbor Lights")),
        ("Glass Garden", ("The Midnight Echoes",)),
    ),
    "electronic": (
        ("Voltage Dreams", ("Circuit Breaker",)),
        ("Midnight Synthesis", ("Aurora Pulse",)),
        ("Binary Sunset", ("Circuit Breaker", "Aurora Pulse")),
        ("Chrome Horizon", ("Nova Relay",)),
        ("Phase Shift", ("Aurora Pulse",)),
        ("Deep Current", ("Nova Relay",)),
        ("Signal Fire", ("Circuit Breaker",)),
        ("Velvet Static", ("Nova Relay", "Vera Moon")),
    ),
    "jazz": (
        ("Blue Tangerine", ("Elsa Marlowe Trio",)),
        ("Crescent City Stroll", ("Dexter Vale",)),
        ("Velvet Afternoon", ("Elsa Marlowe Trio",)),
        ("Smoke and Amber", ("Dexter Vale", "Elsa Marlowe Trio")),
        ("Rainy Window Waltz", ("Dexter Vale",)),
        ("Golden Hour Swing", ("Elsa Marlowe Trio",)),
        ("Harbor Nocturne", ("Dexter Vale",)),
        ("Copper Moon", ("Elsa Marlowe Trio",)),
    ),
    "folk": (
        ("Juniper Hill", ("Rosalind Fern",)),
        ("The Long Meadow", ("Wren and Sparrow",)),
        ("Lantern Light", ("Rosalind Fern",)),
        ("Stone Bridge Song", ("Wren and Sparrow",)),
        ("Wild Clover", ("Rosalind Fern", "Wren and Sparrow")),
        ("Northern Pines", ("Wren and Sparrow",)),
        ("River Reed", ("Rosalind Fern",)),
        ("Harvest Sky", ("Wren and Sparrow",)),
    ),
}

MOVIES = {
    "science fiction": (
        "Orbit of Glass", "The Last Signal", "Meridian Drift", "Chrome Valley",
        "Echoes of Titan", "Neon Fathom",
    ),
    "comedy": (
        "The Borrowed Parrot", "Two Left Shoes", "Picnic Panic", "The Great Sandwich",
        "Uncle Waffles", "Mild Peril",
    ),
    "drama": (
        "Winter Letters", "The Quiet Orchard", "Salt and Stone", "A Year of Rivers",
        "The Persimmon House", "Northern Lights Fade",
    ),
    "thriller": (
        "The Glass Witness", "Midnight Ledger", "Cold Static", "The Ninth Hour",
        "Paper Trail", "The Hollow Key",
    ),
}

TV_SERIES = {
    "sitcom": (("Scrubs and Suds", 4), ("Desk Jockeys", 3), ("The Corner Cafe", 5)),
    "crime": (("Harbor Patrol", 3), ("The Cold Files", 4), ("Inspector Marlow", 2)),
    "fantasy": (("Emberwood", 3), ("The Ninth Realm", 4), ("Cloudspire", 2)),
    "documentary": (("Blue Planet Diaries", 2), ("Makers and Menders", 3), ("Wild Cities", 2)),
}

PRODUCTS = {
    "CDs & Vinyl": (
        ("Cosmic Funk Vinyl", 21.99), ("Jazz Essentials Box", 34.50),
        ("Folk Sessions CD", 12.99), ("Synthwave Collection", 18.75),
    ),
    "Books": (
        ("The Cartographers Daughter", 14.99), ("Practical Stargazing", 22.00),
        ("A History of Bridges", 27.50), ("The Slow Kitchen", 19.95),
    ),
    "Electronics": (
        ("Wireless Earbuds", 79.99), ("Smart Kettle", 49.90),
        ("Trail Camera", 119.00), ("Compact Speaker", 39.95),
    ),
    "Sports & Outdoors": (
        ("Trail Running Shoes", 95.00), ("Yoga Mat Pro", 32.50),
        ("Climbing Chalk Bag", 15.99), ("Insulated Bottle", 24.90),
    ),
    "Home & Kitchen": (
        ("Cast Iron Pan", 44.99), ("Ceramic Pour Over", 28.00),
        ("Linen Apron", 21.50), ("Spice Grinder", 17.25),
    ),
}

CUISINES = {
    "Italian": ("Trattoria Lucana Restaurant", "Il Forno Restaurant"),
    "Japanese": ("Kaze Sushi Restaurant", "Momiji Restaurant"),
    "Mexican": ("Casa Azul Restaurant", "El Jardin Restaurant"),
    "Greek": ("The Parthenon", "Mykonos Terrace Restaurant"),
    "Indian": ("Saffron Court Restaurant", "Masala Lane Restaurant"),
    "French": ("Le Petit Pont Restaurant", "Maison Claire Restaurant"),
}

MEETING_PLACES = (
    "Riverside Park", "Northgate Park", "Harbor View Cafe", "The Copper Kettle Cafe",
    "City Botanical Garden", "Lakeside Promenade",
)

WORKOUT_TYPES = ("running", "soccer", "cycling", "swimming", "yoga", "tennis", "badminton", "hiking")

TRAVEL = {
    "Southeast Asia": ("Bali", "Hanoi", "Chiang Mai"),
    "Southern Europe": ("Lisbon Coast", "Sicily", "Andalusia"),
    "Scandinavia": ("Lofoten", "Gotland", "Jutland"),
    "South America": ("Patagonia", "Cusco", "Cartagena"),
}

HOBBIES = (
    "photography", "gardening", "chess", "pottery", "birdwatching", "climbing",
    "baking", "sketching",
)

DOCTOR_TYPES = ("dentist", "gp", "ophthalmologist", "dermatologist", "paediatrician", "veterinarian")

CLINICS = (
    "Elm Street Clinic", "Harbor Health Centre", "Northside Practice", "Garden Row Clinic",
)
